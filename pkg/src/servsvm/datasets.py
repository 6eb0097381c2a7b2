"""Bundled benchmark datasets with the canonical split and scaling.

Each CSV carries numeric feature columns and a final string label
column.  Class indices follow sorted label order, and the 80/20 test
split is stratified per class from a fixed seed, so every run of the
pipeline sees identical data.
"""

import csv
import importlib.resources

import numpy as np

from .mlkit import Dataset, normalize, stratified_split

__all__ = ["REGISTRY", "available", "load", "normalized",
           "stratified_split"]

REGISTRY = {
    "balance_scale": "balance_scale.csv",
    "dermatology": "dermatology.csv",
    "iris": "iris.csv",
    "seeds": "seeds.csv",
    "vertebral_3c": "vertebral_3c.csv",
}

DEFAULT_SEED = 7
DEFAULT_TEST_FRACTION = 0.2


def available():
    return sorted(REGISTRY)


def load(name, seed=DEFAULT_SEED,
         test_fraction=DEFAULT_TEST_FRACTION) -> Dataset:
    try:
        fname = REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"unknown dataset {name!r}; available: "
            f"{', '.join(available())}") from None
    ref = importlib.resources.files("servsvm") / "data" / fname
    rows = list(csv.reader(ref.read_text().splitlines()))
    header, rows = rows[0], rows[1:]
    if header[-1] != "label":
        raise ValueError(f"{fname}: last column must be 'label'")
    labels = [r[-1] for r in rows]
    class_names = sorted(set(labels))
    index = {c: i for i, c in enumerate(class_names)}
    X = np.array([[float(v) for v in r[:-1]] for r in rows])
    y = np.array([index[label] for label in labels])
    train_idx, test_idx = stratified_split(y, test_fraction, seed)
    return Dataset(name=name, X=X, y=y, train_idx=train_idx,
                   test_idx=test_idx, class_names=class_names)


def normalized(ds: Dataset) -> Dataset:
    """Min-max scale all features by the training statistics."""
    return Dataset(name=ds.name, X=normalize(ds.X_train, ds.X), y=ds.y,
                   train_idx=ds.train_idx, test_idx=ds.test_idx,
                   class_names=ds.class_names)
