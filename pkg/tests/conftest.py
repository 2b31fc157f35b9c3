import itertools
import pathlib
import sys

# Make project root importable
sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1]))

import numpy as np
import pytest

from specbound import common
from specbound.poly import HomoPoly
from specbound.tensor import DenseTensor, symmetrize

ENV_VARS = [
    "SPECBOUND_MONOMIAL_BUDGET",
    "SPECBOUND_THREADS",
    "SPECBOUND_SEED",
    "SPECBOUND_LOG_LEVEL",
    "SPECBOUND_OUTPUT_DIR",
]


@pytest.fixture(autouse=True)
def isolated_env(monkeypatch, tmp_path):
    """Keep a developer's .env and shell settings out of the tests."""
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setattr(common, "ENV_FILE", tmp_path / "missing.env")


def random_poly(rng, n, p):
    rows = [np.bincount(idx, minlength=n) for idx in itertools.combinations_with_replacement(range(n), p)]
    return HomoPoly(n, p, rows, rng.standard_normal(len(rows)))


def random_symmetric_tensor(rng, n, d):
    return symmetrize(DenseTensor(rng.standard_normal((n,) * d)))


@pytest.fixture
def rng():
    return np.random.default_rng(20210419)


@pytest.fixture
def make_poly(rng):
    def factory(n, p):
        return random_poly(rng, n, p)

    return factory


@pytest.fixture
def make_symmetric(rng):
    def factory(n, d):
        return random_symmetric_tensor(rng, n, d)

    return factory
