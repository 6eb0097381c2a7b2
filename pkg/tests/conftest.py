import pathlib

import pytest

HERE = pathlib.Path(__file__).parent


@pytest.fixture(scope="session")
def golden_dir():
    return HERE / "golden"


@pytest.fixture(scope="session")
def trained_models():
    """Float models for every bundled dataset and scheme, trained once."""
    from servsvm import datasets, mlkit

    cache = {}

    def get(name, scheme):
        key = (name, scheme)
        if key not in cache:
            ds = datasets.load(name)
            dsn = datasets.normalized(ds)
            cache[key] = (dsn, mlkit.train(dsn, scheme))
        return cache[key]

    return get


@pytest.fixture(scope="session")
def matrix_report():
    """Full experiment matrix with per-sample agreement collection."""
    from servsvm import bench

    config = bench.MatrixConfig(collect_details=True)
    return bench.run_matrix(config)
