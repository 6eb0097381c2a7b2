"""Training, quantization, and packing behavior, plus the bundled data."""

import numpy as np
import pytest

from servsvm import datasets, mlkit
from servsvm.accel import WeightMode
from servsvm.mlkit import (
    Dataset,
    FloatModel,
    QuantizedModel,
    Scheme,
    _decode_field,
    _encode_field,
    round_half_away,
)


class TestSplit:
    def test_deterministic(self):
        y = np.repeat([0, 1, 2], [30, 20, 10])
        a = mlkit.stratified_split(y, seed=7)
        b = mlkit.stratified_split(y, seed=7)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_per_class_proportions(self):
        y = np.repeat([0, 1, 2], [30, 20, 10])
        train, test = mlkit.stratified_split(y, test_fraction=0.2)
        for cls, n in ((0, 30), (1, 20), (2, 10)):
            assert (y[test] == cls).sum() == round(0.2 * n)
        assert len(set(train) & set(test)) == 0
        assert len(train) + len(test) == len(y)

    def test_indices_sorted(self):
        y = np.repeat([0, 1], 25)
        train, test = mlkit.stratified_split(y)
        assert np.array_equal(train, np.sort(train))
        assert np.array_equal(test, np.sort(test))


class TestNormalize:
    def test_unit_range_from_train_stats(self):
        train = np.array([[0.0, 10.0], [4.0, 30.0]])
        out = mlkit.normalize(train, train)
        assert np.allclose(out, [[0, 0], [1, 1]])

    def test_constant_column_maps_to_zero(self):
        train = np.array([[5.0, 1.0], [5.0, 3.0]])
        out = mlkit.normalize(train, train)
        assert np.allclose(out[:, 0], 0.0)

    def test_out_of_range_test_rows_clamped(self):
        train = np.array([[0.0], [10.0]])
        out = mlkit.normalize(train, np.array([[-5.0], [15.0]]))
        assert out.min() == 0.0 and out.max() == 1.0


class TestTraining:
    def test_iris_float_accuracy(self, trained_models):
        ds, model = trained_models("iris", Scheme.OVR)
        acc = mlkit.accuracy(ds.y_test, model.predict(ds.X_test))
        assert acc >= 0.9

    def test_ovo_pair_enumeration(self, trained_models):
        _, model = trained_models("iris", Scheme.OVO)
        assert model.pairs == [(0, 1), (0, 2), (1, 2)]
        assert model.n_classifiers == 3

    def test_deterministic_retrain(self):
        ds = datasets.normalized(datasets.load("iris"))
        cfg = mlkit.TrainConfig(epochs=200)
        a = mlkit.train(ds, Scheme.OVR, cfg)
        b = mlkit.train(ds, Scheme.OVR, cfg)
        assert np.array_equal(a.W, b.W) and np.array_equal(a.B, b.B)

    def test_warns_when_still_improving(self):
        ds = datasets.normalized(datasets.load("iris"))
        with pytest.warns(mlkit.ConvergenceWarning):
            mlkit.train(ds, Scheme.OVR, mlkit.TrainConfig(epochs=1))


class TestRounding:
    @pytest.mark.parametrize("x,expected", [
        (0.5, 1), (-0.5, -1), (2.5, 3), (-2.5, -3), (1.4, 1), (-1.4, -1),
        (0.0, 0),
    ])
    def test_half_rounds_away_from_zero(self, x, expected):
        assert round_half_away(x) == expected

    def test_vectorized(self):
        out = round_half_away(np.array([0.5, -0.5, 1.2]))
        assert np.array_equal(out, [1, -1, 1])


class TestQuantize:
    def _model(self, W, B):
        W = np.asarray(W, float)
        return FloatModel(scheme=Scheme.OVR, n_classes=len(W), W=W,
                          B=np.asarray(B, float))

    def test_worked_example(self):
        q = mlkit.quantize(self._model([[0.5, -1.0, 0.25]], [0.0]), 4)
        assert q.scale == pytest.approx(1.0 / 7)
        assert q.W.tolist() == [[4, -7, 2]]
        assert q.B.tolist() == [0]

    def test_scale_covers_bias(self):
        q = mlkit.quantize(self._model([[0.5, 0.5]], [-21.0]), 4)
        assert q.scale == pytest.approx(3.0)
        assert q.B.tolist() == [-7]

    def test_all_zero_model_keeps_unit_scale(self):
        q = mlkit.quantize(self._model([[0.0, 0.0]], [0.0]), 8)
        assert q.scale == 1.0

    def test_levels_per_width(self):
        model = self._model([[1.0, -1.0]], [0.5])
        for bits, top in ((4, 7), (8, 127), (16, 32767)):
            q = mlkit.quantize(model, bits)
            assert q.W.max() == top and q.W.min() == -top

    @pytest.mark.parametrize("bits", [0, 2, 5, 32])
    def test_unsupported_width_rejected(self, bits):
        with pytest.raises(ValueError):
            mlkit.quantize(self._model([[1.0]], [0.0]), bits)

    def test_feature_grid(self):
        x = np.array([0.0, 0.5, 1.0])
        assert mlkit.quantize_features(x).tolist() == [0, 8, 15]

    def test_feature_clip(self):
        x = np.array([-0.2, 1.4])
        assert mlkit.quantize_features(x).tolist() == [0, 15]


class TestIntegerScores:
    def test_score_formula(self):
        q = QuantizedModel(scheme=Scheme.OVR, n_classes=2, bits=4,
                           W=np.array([[1, -2], [3, 0]]),
                           B=np.array([2, -1]), scale=1.0)
        qx = np.array([5, 7])
        assert q.score_int(qx).tolist() == [5 - 14 + 30, 15 - 15]

    def test_high_precision_argmax_matches_float(self, trained_models):
        ds, model = trained_models("iris", Scheme.OVR)
        q = mlkit.quantize(model, 16)
        Q = mlkit.quantize_features(ds.X_test)
        agree = np.mean(q.predict_int(Q) == model.predict(ds.X_test))
        assert agree >= 0.95

    def test_pairwise_votes_match_float_path(self, trained_models):
        ds, model = trained_models("iris", Scheme.OVO)
        q = mlkit.quantize(model, 16)
        Q = mlkit.quantize_features(ds.X_test)
        agree = np.mean(q.predict_int(Q) == model.predict(ds.X_test))
        assert agree >= 0.95


class TestFieldEncoding:
    @pytest.mark.parametrize("w,bits,raw", [
        (-1, 4, 0xF), (-7, 4, 0x9), (7, 4, 0x7), (0, 4, 0x0),
        (-5, 8, 0xFB), (127, 8, 0x7F), (-32767, 16, 0x8001),
    ])
    def test_twos_complement(self, w, bits, raw):
        assert _encode_field(w, bits) == raw
        assert _decode_field(raw, bits) == w

    @pytest.mark.parametrize("bits", [4, 8, 16])
    def test_most_negative_value_rejected(self, bits):
        with pytest.raises(ValueError):
            _encode_field(-(1 << (bits - 1)), bits)


class TestPack:
    def _quantized(self, rng, n_classes, d, bits, scheme=Scheme.OVR):
        top = (1 << (bits - 1)) - 1
        if scheme is Scheme.OVR:
            k = n_classes
            pairs = None
        else:
            pairs = [(a, b) for a in range(n_classes)
                     for b in range(a + 1, n_classes)]
            k = len(pairs)
        return QuantizedModel(
            scheme=scheme, n_classes=n_classes, bits=bits,
            W=rng.integers(-top, top + 1, size=(k, d)),
            B=rng.integers(-top, top + 1, size=k),
            scale=0.25, pairs=pairs)

    @pytest.mark.parametrize("bits,wpc", [(4, 1), (8, 2), (16, 3)])
    def test_words_per_classifier(self, bits, wpc):
        rng = np.random.default_rng(0)
        packed = mlkit.pack(self._quantized(rng, 3, 4, bits))
        assert packed.wpc == wpc
        assert all(len(w) == wpc for w in packed.weight_words)

    def test_feature_word_layout(self):
        rng = np.random.default_rng(0)
        packed = mlkit.pack(self._quantized(rng, 3, 4, 4))
        words = packed.feature_words([3, 9, 1, 1])
        assert words == [0x000F1193]

    def test_feature_word_validation(self):
        rng = np.random.default_rng(0)
        packed = mlkit.pack(self._quantized(rng, 3, 4, 4))
        with pytest.raises(ValueError):
            packed.feature_words([1, 2, 3])
        with pytest.raises(ValueError):
            packed.feature_words([1, 2, 3, 16])

    @pytest.mark.parametrize("bits", [4, 8, 16])
    @pytest.mark.parametrize("scheme", [Scheme.OVR, Scheme.OVO])
    def test_round_trip(self, bits, scheme):
        rng = np.random.default_rng(11)
        for d in (1, 3, 8, 17):
            q = self._quantized(rng, 3, d, bits, scheme)
            back = mlkit.unpack(mlkit.pack(q))
            assert np.array_equal(back.W, q.W)
            assert np.array_equal(back.B, q.B)
            assert back.scheme == q.scheme and back.bits == q.bits
            assert back.scale == q.scale and back.pairs == q.pairs

    def test_lane_counts_match_mode(self):
        rng = np.random.default_rng(1)
        for bits, mode in ((4, WeightMode.W4), (8, WeightMode.W8),
                           (16, WeightMode.W16)):
            packed = mlkit.pack(self._quantized(rng, 2, 5, bits))
            assert packed.mode is mode
            assert packed.wpc == -(-6 // mode.lanes)


class TestModelIO:
    def test_float_round_trip(self, tmp_path, trained_models):
        _, model = trained_models("iris", Scheme.OVO)
        path = tmp_path / "m.json"
        mlkit.save_model(model, path)
        back = mlkit.load_model(path)
        assert isinstance(back, FloatModel)
        assert np.allclose(back.W, model.W) and np.allclose(back.B, model.B)
        assert back.pairs == model.pairs
        assert back.scheme == model.scheme

    def test_quantized_round_trip(self, tmp_path, trained_models):
        _, model = trained_models("iris", Scheme.OVR)
        q = mlkit.quantize(model, 8)
        path = tmp_path / "q.json"
        mlkit.save_model(q, path)
        back = mlkit.load_model(path)
        assert isinstance(back, QuantizedModel)
        assert np.array_equal(back.W, q.W)
        assert back.scale == pytest.approx(q.scale)
        assert back.bits == 8

    def test_unknown_kind_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"kind": "mystery"}')
        with pytest.raises(ValueError):
            mlkit.load_model(path)


class TestDatasets:
    def test_registry(self):
        assert datasets.available() == [
            "balance_scale", "dermatology", "iris", "seeds", "vertebral_3c"]

    @pytest.mark.parametrize("name,rows,features,classes", [
        ("balance_scale", 625, 4, 3),
        ("dermatology", 366, 34, 6),
        ("iris", 150, 4, 3),
        ("seeds", 210, 7, 3),
        ("vertebral_3c", 310, 6, 3),
    ])
    def test_shapes(self, name, rows, features, classes):
        ds = datasets.load(name)
        assert ds.X.shape == (rows, features)
        assert len(ds.y) == rows
        assert ds.n_classes == classes
        assert len(ds.train_idx) + len(ds.test_idx) == rows

    def test_balance_scale_rule(self):
        ds = datasets.load("balance_scale")
        counts = dict(zip(*np.unique(ds.y, return_counts=True)))
        by_name = {ds.class_names[k]: v for k, v in counts.items()}
        assert by_name == {"B": 49, "L": 288, "R": 288}
        lw, ld, rw, rd = ds.X.T
        left, right = lw * ld, rw * rd
        expect = np.where(left > right, "L", np.where(right > left,
                                                      "R", "B"))
        got = np.array([ds.class_names[c] for c in ds.y])
        assert np.array_equal(got, expect)

    def test_load_reproducible(self):
        a = datasets.load("seeds")
        b = datasets.load("seeds")
        assert np.array_equal(a.test_idx, b.test_idx)
        assert np.array_equal(a.X, b.X)

    def test_normalized_unit_interval(self):
        ds = datasets.normalized(datasets.load("vertebral_3c"))
        assert ds.X.min() >= 0.0 and ds.X.max() <= 1.0

    def test_unknown_name_rejected(self):
        with pytest.raises(KeyError):
            datasets.load("mystery")
