"""Shared fixtures and generators for the test suite."""

import pathlib

import numpy as np
import pytest

from stratlogit.evaluate import make_split
from stratlogit.indicators import build_feature_matrix
from stratlogit.ingest import filter_eligible, parse_dataset
from stratlogit.logit import DesignMatrix

ROOT = pathlib.Path(__file__).resolve().parent.parent
DATA = ROOT / "data"


@pytest.fixture(scope="session")
def scholar_csv() -> str:
    path = DATA / "synthetic_scholars.csv"
    assert path.exists(), "bundled fixture missing; run scripts/make_fixtures.py"
    return str(path)


@pytest.fixture(scope="session")
def edges_csv() -> str:
    path = DATA / "coauthor_edges.csv"
    assert path.exists(), "bundled fixture missing; run scripts/make_fixtures.py"
    return str(path)


@pytest.fixture(scope="session")
def fixture_dataset(scholar_csv):
    return filter_eligible(parse_dataset(scholar_csv))


@pytest.fixture(scope="session")
def fixture_matrix(fixture_dataset):
    return build_feature_matrix(fixture_dataset)


@pytest.fixture(scope="session")
def fixture_split(fixture_matrix):
    return make_split(fixture_matrix.n_rows, 0.7, 0)


def sigmoid_ref(eta):
    eta = np.asarray(eta, dtype=float)
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    ex = np.exp(eta[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def make_problem(seed, n=300, p=4, beta_scale=1.0):
    """Random well-behaved logistic problem with known coefficients.

    Reseeds deterministically until both classes appear, so any seed is
    usable.
    """
    for attempt in range(50):
        rng = np.random.Generator(np.random.PCG64(seed + 100000 * attempt))
        X = rng.normal(0.0, 1.0, (n, p))
        beta = rng.uniform(-beta_scale, beta_scale, p + 1)
        eta = beta[0] + X @ beta[1:]
        y = (rng.random(n) < sigmoid_ref(eta)).astype(float)
        if 0 < y.sum() < n:
            design = DesignMatrix(
                X=np.column_stack([np.ones(n), X]),
                y=y,
                feature_names=tuple(f"x{j}" for j in range(p)),
            )
            return design, beta
    raise AssertionError("could not generate a two-class problem")
