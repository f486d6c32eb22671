"""Desk-scale iteration counts on Gaussian and sparse problems

Iteration counts of random instances scatter, so the bounds below are bands
rather than exact counts. The ordering between the methods is asserted exactly.
"""
import numpy as np
import pytest
import scipy.sparse as sp

from shsk.analysis import verify_certificates
from shsk.problems import (
    gen_gaussian,
    matrix_market_read,
    matrix_market_write,
    plant_for_matrix,
)
from shsk.solvers import PartialResidual, Residual, run
from shsk.types import RateCertificate, RowMatrix, StopCriteria, StopReason

SEED = 7


def _iterations(problem, strategy):
    _, history = run(problem, strategy, StopCriteria())
    assert history.stop_reason is StopReason.RSE_TOL
    # only the per-step decrease is checked, q is a placeholder
    report = verify_certificates(history, RateCertificate(nu=1.0, q=1e-300))
    assert report.lemma3_violations == []
    return history.iterations


@pytest.mark.slow
def test_overdetermined_table():
    problem = gen_gaussian(2000, 1000, nnz=10, seed=SEED)
    its = {
        "shskr": _iterations(problem, Residual()),
        0.0: _iterations(problem, PartialResidual(0.0)),
        0.5: _iterations(problem, PartialResidual(0.5)),
        1.0: _iterations(problem, PartialResidual(1.0)),
    }
    assert its["shskr"] <= 100
    assert its[0.0] <= 150
    assert its[0.5] <= 500
    assert its[1.0] <= 10000
    assert its["shskr"] <= its[0.0] <= its[0.5] <= its[1.0]


@pytest.mark.slow
def test_underdetermined_table():
    problem = gen_gaussian(1000, 2000, nnz=20, seed=SEED)
    its = [
        _iterations(problem, Residual()),
        _iterations(problem, PartialResidual(0.0)),
        _iterations(problem, PartialResidual(0.5)),
        _iterations(problem, PartialResidual(1.0)),
    ]
    assert its[0] <= 200
    assert its == sorted(its)


def _sparse_958x292(seed):
    """Standard normal entries at 10% density, about 29 coupled entries per row"""
    rng = np.random.default_rng(seed)
    return sp.random(
        958,
        292,
        density=0.1,
        format="csr",
        random_state=rng,
        data_rvs=rng.standard_normal,
    )


@pytest.mark.slow
def test_sparse_matrix_ordering(tmp_path):
    path = tmp_path / "synthetic958.mtx"
    matrix_market_write(RowMatrix(_sparse_958x292(SEED)), path)
    A = matrix_market_read(path)
    assert A.shape == (958, 292)
    assert A.is_sparse
    assert A.density == pytest.approx(0.1, abs=1e-3)

    problem = plant_for_matrix(A, seed=SEED, nnz=10)
    assert np.count_nonzero(problem.reference) == 10
    # most equations see the planted support
    assert np.count_nonzero(problem.b) > 958 // 2
    shskr = _iterations(problem, Residual())
    _, greedy = run(problem, PartialResidual(1.0), StopCriteria())
    assert greedy.stop_reason is StopReason.RSE_TOL
    assert shskr < greedy.iterations
