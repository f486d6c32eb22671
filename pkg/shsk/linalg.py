"""Linear-algebra kernels shared by every solver step"""
import logging
from typing import Any, Dict

import numpy as np
from scipy.linalg import svdvals

from .types import RowMatrix, SpectralSummary

log = logging.getLogger(__name__)

# Full SVD guard for spectral_summary
SVD_MAX_DIM = 5000


def _check_length(vec: np.ndarray, expected: int, what: str) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (expected,):
        raise ValueError(
            f"Dimension mismatch for {what}! Expected {expected} got {vec.shape}"
        )
    return vec


def apply(M: RowMatrix, x: np.ndarray) -> np.ndarray:
    """A x"""
    x = _check_length(x, M.n, "x")
    return np.asarray(M.entries @ x).ravel()


def transpose_apply(M: RowMatrix, eta: np.ndarray) -> np.ndarray:
    """A^T eta = sum_i eta_i a_i

    Only rows in the support of eta are touched when the support is small, which
    keeps single-row and partial-residual steps cheap.
    """
    eta = _check_length(eta, M.m, "eta")
    support = np.flatnonzero(eta)
    if support.size == 0:
        return np.zeros(M.n)
    if 4 * support.size < M.m:
        sub = M.entries[support]
        return np.asarray(sub.T @ eta[support]).ravel()
    return np.asarray(M.entries.T @ eta).ravel()


def residual(M: RowMatrix, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """b - A x"""
    b = _check_length(b, M.m, "b")
    return b - apply(M, x)


def singular_values(a: np.ndarray) -> np.ndarray:
    """Singular values of a dense block, largest first"""
    if a.size == 0:
        return np.zeros(0)
    return svdvals(a, check_finite=False)


def rank_tolerance(shape, sigma_max: float) -> float:
    return max(shape) * sigma_max * np.finfo(np.float64).eps


def smallest_nonzero_singular_value(a: np.ndarray) -> float:
    """Smallest singular value above the numerical-rank tolerance, 0.0 if none"""
    sv = singular_values(a)
    if sv.size == 0 or sv[0] == 0:
        return 0.0
    nonzero = sv[sv > rank_tolerance(a.shape, sv[0])]
    return float(nonzero[-1]) if nonzero.size else 0.0


def spectral_summary(M: RowMatrix) -> SpectralSummary:
    """Full-SVD summary of A: sigma_max, sigma_min, smallest nonzero, rank"""
    if min(M.m, M.n) > SVD_MAX_DIM:
        raise ValueError(
            f"Matrix too large for full SVD! Expected min(m, n) <= {SVD_MAX_DIM} "
            f"got {min(M.m, M.n)}"
        )
    sv = singular_values(M.toarray())
    if sv[0] == 0:
        raise ValueError("Zero matrix has no nonzero singular value")
    tol = rank_tolerance(M.shape, sv[0])
    nonzero = sv[sv > tol]
    summary = SpectralSummary(
        sigma_max=float(sv[0]),
        sigma_min=float(sv[-1]),
        sigma_min_nonzero=float(nonzero[-1]),
        rank=int(nonzero.size),
        tol=float(tol),
    )
    log.debug(f"Spectral summary for {M!r}: {summary}")
    return summary


def matrix_info(M: RowMatrix) -> Dict[str, Any]:
    """Dimensions, density (%), numerical rank and condition number of A"""
    summary = spectral_summary(M)
    full_rank = summary.rank == min(M.m, M.n)
    return {
        "m": M.m,
        "n": M.n,
        "density_pct": 100.0 * M.density,
        "rank": summary.rank,
        "kappa": summary.kappa if full_rank else float("inf"),
    }
