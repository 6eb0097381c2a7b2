"""Linear SVM training, quantization, and operand packing.

Training is a deterministic full-batch subgradient descent on the
hinge loss with an L2 penalty, decaying step 1/(lambda*t), and the
usual norm projection; the best-objective iterate wins.  C is picked
on a held-out quarter of the training split, then the model is refit
on the full split.

Quantization uses one global scale for weights and biases so a single
shift recovers real scores.  Features are quantized to 4-bit unsigned
(0..15) regardless of the weight width.  The bias rides along as one
extra (feature=15, weight=B) term, so a d-feature classifier packs
d+1 fields.
"""

import json
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .accel import WeightMode


class Scheme(str, Enum):
    OVR = "ovr"
    OVO = "ovo"


class ConvergenceWarning(UserWarning):
    pass


FEATURE_LEVELS = 15  # features quantize onto 0..15


@dataclass
class Dataset:
    name: str
    X: np.ndarray
    y: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    class_names: list

    @property
    def X_train(self):
        return self.X[self.train_idx]

    @property
    def y_train(self):
        return self.y[self.train_idx]

    @property
    def X_test(self):
        return self.X[self.test_idx]

    @property
    def y_test(self):
        return self.y[self.test_idx]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


def stratified_split(y, test_fraction=0.2, seed=7):
    """Per-class permutation split; returns (train_idx, test_idx)."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    test = []
    train = []
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        perm = rng.permutation(idx)
        n_test = int(round(test_fraction * len(idx)))
        test.append(perm[:n_test])
        train.append(perm[n_test:])
    train_idx = np.sort(np.concatenate(train))
    test_idx = np.sort(np.concatenate(test))
    return train_idx, test_idx


def normalize(train_X, X):
    """Min-max scale by training statistics, clamped to [0, 1]."""
    train_X = np.asarray(train_X, float)
    X = np.asarray(X, float)
    lo = train_X.min(axis=0)
    span = train_X.max(axis=0) - lo
    out = np.zeros_like(X)
    nz = span > 0
    out[:, nz] = (X[:, nz] - lo[nz]) / span[nz]
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class TrainConfig:
    c_grid: tuple = (0.01, 0.1, 1.0, 10.0)
    epochs: int = 2000
    seed: int = 7
    val_fraction: float = 0.25


def _fit_binary(X, y, c, epochs):
    """Hinge + L2 subgradient descent; returns (w, b, best_iter).

    The intercept is trained as a weight on a constant feature, the
    same way the integer pipeline applies it, so it shares the
    regularization ball and stays on the weight magnitude scale.
    """
    n, d = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    lam = 1.0 / (c * n)
    radius = 1.0 / np.sqrt(lam)
    w = np.zeros(d + 1)
    best_obj = np.inf
    best = (w[:d], 0.0, 0)
    for t in range(1, epochs + 1):
        eta = 1.0 / (lam * t)
        viol = y * (Xa @ w) < 1.0
        yv = y * viol
        w = w - eta * (lam * w - (yv @ Xa) / n)
        norm = np.linalg.norm(w)
        if norm > radius:
            w *= radius / norm
        obj = (0.5 * lam * (w @ w)
               + np.maximum(0.0, 1.0 - y * (Xa @ w)).mean())
        if obj < best_obj:
            best_obj = obj
            best = (w[:d].copy(), float(w[d]), t)
    return best


@dataclass
class FloatModel:
    scheme: Scheme
    n_classes: int
    W: np.ndarray
    B: np.ndarray
    pairs: list = None
    c: float = 1.0
    val_accuracy: float = 0.0

    @property
    def n_classifiers(self) -> int:
        return len(self.W)

    def decision_values(self, X):
        return np.asarray(X, float) @ self.W.T + self.B

    def predict(self, X):
        return _predict_from_scores(self.decision_values(X), self.scheme,
                                    self.n_classes, self.pairs)


def _predict_from_scores(scores, scheme, n_classes, pairs):
    if scheme is Scheme.OVR:
        return np.argmax(scores, axis=1)
    votes = np.zeros((scores.shape[0], n_classes), dtype=int)
    rows = np.arange(scores.shape[0])
    for k, (a, b) in enumerate(pairs):
        votes[rows, np.where(scores[:, k] >= 0, a, b)] += 1
    return np.argmax(votes, axis=1)


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    return float(np.mean(y_true == np.asarray(y_pred)))


def _train_scheme(X, y, n_classes, scheme, c, epochs):
    W = []
    B = []
    iters = []
    pairs = None
    if scheme is Scheme.OVR:
        for k in range(n_classes):
            yb = np.where(y == k, 1.0, -1.0)
            w, b, it = _fit_binary(X, yb, c, epochs)
            W.append(w)
            B.append(b)
            iters.append(it)
    else:
        pairs = [(a, b) for a in range(n_classes)
                 for b in range(a + 1, n_classes)]
        for a, b in pairs:
            mask = (y == a) | (y == b)
            yb = np.where(y[mask] == a, 1.0, -1.0)
            w, bias, it = _fit_binary(X[mask], yb, c, epochs)
            W.append(w)
            B.append(bias)
            iters.append(it)
    model = FloatModel(scheme=scheme, n_classes=n_classes,
                       W=np.array(W), B=np.array(B), pairs=pairs, c=c)
    return model, max(iters)


def train(dataset: Dataset, scheme, config: TrainConfig = None) -> FloatModel:
    """Fit one model per the scheme with C chosen on a validation split."""
    scheme = Scheme(scheme)
    cfg = config or TrainConfig()
    X = np.asarray(dataset.X_train, float)
    y = np.asarray(dataset.y_train)
    n_classes = dataset.n_classes

    fit_idx, val_idx = stratified_split(y, cfg.val_fraction, cfg.seed)
    best_c = cfg.c_grid[0]
    best_acc = -1.0
    for c in cfg.c_grid:
        model, _ = _train_scheme(X[fit_idx], y[fit_idx], n_classes,
                                 scheme, c, cfg.epochs)
        acc = accuracy(y[val_idx], model.predict(X[val_idx]))
        if acc > best_acc:
            best_acc = acc
            best_c = c

    model, last_improved = _train_scheme(X, y, n_classes, scheme,
                                         best_c, cfg.epochs)
    if last_improved > 0.95 * cfg.epochs:
        warnings.warn(
            f"objective still improving at iteration {last_improved} of "
            f"{cfg.epochs}; consider more epochs", ConvergenceWarning,
            stacklevel=2)
    model.c = best_c
    model.val_accuracy = best_acc
    return model


def round_half_away(x):
    """Round to nearest integer, halves away from zero."""
    x = np.asarray(x, float)
    out = np.sign(x) * np.floor(np.abs(x) + 0.5)
    return out.astype(int) if out.ndim else int(out)


@dataclass
class QuantizedModel:
    scheme: Scheme
    n_classes: int
    bits: int
    W: np.ndarray
    B: np.ndarray
    scale: float
    pairs: list = None

    @property
    def n_classifiers(self) -> int:
        return len(self.W)

    @property
    def n_features(self) -> int:
        return self.W.shape[1]

    def score_int(self, qx):
        """Integer decision values as the hardware computes them."""
        return self.W @ np.asarray(qx, int) + self.B * FEATURE_LEVELS

    def predict_int(self, Q):
        scores = np.asarray(Q, int) @ self.W.T + FEATURE_LEVELS * self.B
        return _predict_from_scores(scores, self.scheme, self.n_classes,
                                    self.pairs)


def quantize(model: FloatModel, bits: int) -> QuantizedModel:
    """Signed weight quantization with one global scale for W and B."""
    mode = WeightMode(bits)
    top = (1 << (mode.bits - 1)) - 1
    peak = max(np.abs(model.W).max(), np.abs(model.B).max())
    scale = peak / top if peak > 0 else 1.0
    return QuantizedModel(
        scheme=model.scheme, n_classes=model.n_classes, bits=bits,
        W=round_half_away(model.W / scale),
        B=round_half_away(model.B / scale),
        scale=scale, pairs=model.pairs)


def quantize_features(x):
    """Map [0, 1] features onto the 4-bit grid 0..15."""
    q = round_half_away(FEATURE_LEVELS * np.asarray(x, float))
    return np.clip(q, 0, FEATURE_LEVELS)


def _encode_field(w, bits):
    # two's complement, as the multiplier array consumes it; the most
    # negative value is excluded so no field ever saturates
    w = int(w)
    top = (1 << (bits - 1)) - 1
    if not -top <= w <= top:
        raise ValueError(f"weight {w} outside {bits}-bit range +-{top}")
    return w & ((1 << bits) - 1)


def _decode_field(raw, bits):
    if raw >> (bits - 1):
        return raw - (1 << bits)
    return raw


@dataclass
class PackedModel:
    """Classifier weights packed into ready-to-issue operand words."""

    scheme: Scheme
    bits: int
    n_classes: int
    n_features: int
    wpc: int
    scale: float
    weight_words: list
    pairs: list = None

    @property
    def mode(self) -> WeightMode:
        return WeightMode(self.bits)

    @property
    def n_classifiers(self) -> int:
        return len(self.weight_words)

    def feature_words(self, qx) -> list:
        """Pack quantized features to pair with each weight word."""
        qx = [int(v) for v in qx]
        if len(qx) != self.n_features:
            raise ValueError(
                f"expected {self.n_features} features, got {len(qx)}")
        for v in qx:
            if not 0 <= v <= FEATURE_LEVELS:
                raise ValueError(f"feature value {v} outside 0..15")
        lanes = self.mode.lanes
        fields = qx + [FEATURE_LEVELS]
        fields += [0] * (self.wpc * lanes - len(fields))
        words = []
        for j in range(self.wpc):
            chunk = fields[j * lanes:(j + 1) * lanes]
            words.append(sum(f << (4 * k) for k, f in enumerate(chunk)))
        return words


def pack(qmodel: QuantizedModel) -> PackedModel:
    mode = WeightMode(qmodel.bits)
    lanes = mode.lanes
    d = qmodel.n_features
    wpc = -(-(d + 1) // lanes)
    weight_words = []
    for w_row, bias in zip(qmodel.W, qmodel.B):
        fields = [int(v) for v in w_row] + [int(bias)]
        fields += [0] * (wpc * lanes - len(fields))
        words = []
        for j in range(wpc):
            chunk = fields[j * lanes:(j + 1) * lanes]
            words.append(sum(
                _encode_field(w, mode.bits) << (mode.bits * k)
                for k, w in enumerate(chunk)))
        weight_words.append(words)
    return PackedModel(
        scheme=qmodel.scheme, bits=qmodel.bits, n_classes=qmodel.n_classes,
        n_features=d, wpc=wpc, scale=qmodel.scale,
        weight_words=weight_words, pairs=qmodel.pairs)


def unpack(packed: PackedModel) -> QuantizedModel:
    mode = packed.mode
    lanes = mode.lanes
    mask = (1 << mode.bits) - 1
    W = []
    B = []
    for words in packed.weight_words:
        fields = []
        for word in words:
            for k in range(lanes):
                fields.append(_decode_field((word >> (mode.bits * k))
                                            & mask, mode.bits))
        W.append(fields[:packed.n_features])
        B.append(fields[packed.n_features])
    return QuantizedModel(
        scheme=packed.scheme, n_classes=packed.n_classes, bits=packed.bits,
        W=np.array(W, int), B=np.array(B, int), scale=packed.scale,
        pairs=packed.pairs)


def save_model(model, path) -> None:
    if isinstance(model, FloatModel):
        doc = {"kind": "float", "scheme": model.scheme.value,
               "n_classes": model.n_classes, "W": model.W.tolist(),
               "B": model.B.tolist(), "pairs": model.pairs, "c": model.c,
               "val_accuracy": model.val_accuracy}
    elif isinstance(model, QuantizedModel):
        doc = {"kind": "quantized", "scheme": model.scheme.value,
               "n_classes": model.n_classes, "bits": model.bits,
               "W": model.W.tolist(), "B": model.B.tolist(),
               "scale": model.scale, "pairs": model.pairs}
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_model(path):
    doc = json.loads(Path(path).read_text())
    pairs = doc.get("pairs")
    if pairs is not None:
        pairs = [tuple(p) for p in pairs]
    if doc["kind"] == "float":
        return FloatModel(
            scheme=Scheme(doc["scheme"]), n_classes=doc["n_classes"],
            W=np.array(doc["W"], float), B=np.array(doc["B"], float),
            pairs=pairs, c=doc["c"], val_accuracy=doc["val_accuracy"])
    if doc["kind"] == "quantized":
        return QuantizedModel(
            scheme=Scheme(doc["scheme"]), n_classes=doc["n_classes"],
            bits=doc["bits"], W=np.array(doc["W"], int),
            B=np.array(doc["B"], int), scale=doc["scale"], pairs=pairs)
    raise ValueError(f"unrecognized model kind {doc['kind']!r}")
