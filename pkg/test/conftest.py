"""conftest.py is for test-suite-wide definitions

The desk-scale table reproductions (2000x1000 and 1000x2000 Gaussian problems, a
958x292 sparse matrix) take minutes and are marked slow. Run them with:
    pytest --run-slow
"""
import numpy as np
import pytest

from shsk.problems import make_consistent_rhs, plant_sparse
from shsk.types import Problem, RowMatrix


def pytest_addoption(parser):
    parser.addoption(
        "--run-slow", action="store_true", default=False, help="run slow tests"
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: mark test as slow to run")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        # --run-slow given in cli: do not skip slow tests
        return
    skip_slow = pytest.mark.skip(reason="need --run-slow option to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def random_problem(m, n, nnz, seed, lam=1.5) -> Problem:
    """Gaussian A with a planted solution, consistent b"""
    rng = np.random.default_rng(seed)
    A = RowMatrix(rng.standard_normal((m, n)))
    x_hat = plant_sparse(n, nnz, rng)
    return Problem(A, make_consistent_rhs(A, x_hat), lam, x_hat)


def tiny_full_rank_problem(seed, lam=1.5) -> Problem:
    """m > n <= 8 Gaussian problem; full column rank almost surely, so the planted
    vector is the unique solution of A x = b"""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    m = n + int(rng.integers(2, 8))
    A = RowMatrix(rng.standard_normal((m, n)))
    x_hat = plant_sparse(n, int(rng.integers(1, 3)), rng)
    return Problem(A, make_consistent_rhs(A, x_hat), lam, x_hat)


@pytest.fixture
def identity_problem() -> Problem:
    """A = I_2, b = [2, 1]"""
    b = np.array([2.0, 1.0])
    return Problem(RowMatrix(np.eye(2)), b, 1.5, b.copy())


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20230415)
