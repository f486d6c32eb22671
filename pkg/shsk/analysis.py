"""Error-bound constants and contraction-factor certificates

For x* in the range of A^T with x = S_lam(x*), the Bregman distance to the
solution is bounded by the squared residual,

    D_f^{x*}(x, x_hat) <= nu * ||A x - b||^2,
    nu = (|x_hat|_min + 2*lam) / (sigma_tilde_min(A)^2 * |x_hat|_min),

which turns the per-step decrease of every surrogate hyperplane step into a linear
rate. The functions here compute nu and the rates, and check recorded histories
against them.
"""
import itertools
import logging
from typing import Optional

import numpy as np

from .linalg import singular_values, smallest_nonzero_singular_value, spectral_summary
from .types import (
    ConvergenceHistory,
    NotComputableError,
    RateCertificate,
    RowMatrix,
    VerificationReport,
)

log = logging.getLogger(__name__)

# Column-subset enumeration visits 2**n - 1 subsets
DEFAULT_N_LIMIT = 15
CERTIFICATE_RTOL = 1e-9


def sigma_tilde_min(M: RowMatrix, n_limit: int = DEFAULT_N_LIMIT) -> float:
    """Smallest nonzero singular value over all nonzero column submatrices A_J"""
    if M.n > n_limit:
        raise NotComputableError(
            "Column subset enumeration not computable! "
            f"Expected n <= {n_limit} got {M.n}"
        )
    if M.fro_norm_sq == 0:
        raise ValueError("Zero matrix has no nonzero column submatrix")

    best = np.inf
    for size in range(1, M.n + 1):
        for cols in itertools.combinations(range(M.n), size):
            s = smallest_nonzero_singular_value(M.columns(cols))
            # s == 0 means A_J = 0, which the minimum skips
            if 0 < s < best:
                best = s
    log.debug(f"sigma_tilde_min over {2 ** M.n - 1} subsets: {best}")
    return float(best)


def x_hat_min_abs(x_hat: np.ndarray) -> float:
    """Smallest |x_hat_j| over the support of x_hat"""
    x_hat = np.abs(np.asarray(x_hat, dtype=np.float64))
    support = x_hat[x_hat > 0]
    if support.size == 0:
        raise ValueError("|x_hat|_min is undefined for a zero vector")
    return float(support.min())


def nu(
    M: RowMatrix, x_hat: np.ndarray, lam: float, n_limit: int = DEFAULT_N_LIMIT
) -> float:
    """Error-bound constant (|x_hat|_min + 2 lam) / (sigma_tilde_min^2 |x_hat|_min)"""
    sigma = sigma_tilde_min(M, n_limit)
    x_min = x_hat_min_abs(x_hat)
    return (x_min + 2.0 * lam) / (sigma * sigma * x_min)


def q_theorem1(
    M: RowMatrix,
    x_hat: np.ndarray,
    lam: float,
    n_limit: int = DEFAULT_N_LIMIT,
    nu_value: Optional[float] = None,
) -> float:
    """Full-residual rate q = 1 / (2 nu sigma_max(A)^2)"""
    if nu_value is None:
        nu_value = nu(M, x_hat, lam, n_limit)
    sigma_max = spectral_summary(M).sigma_max
    return 1.0 / (2.0 * nu_value * sigma_max * sigma_max)


def q_k_theorem2(M: RowMatrix, tau_k, epsilon_k: float, nu_value: float) -> float:
    """Partial-residual rate q_k = eps_k ||A_tau||_F^2 / (2 nu sigma_max(A_tau)^2)"""
    tau_k = np.asarray(tau_k, dtype=np.intp)
    if tau_k.size == 0:
        raise ValueError("Empty row index set")
    fro_tau = float(M.row_norm_sq[tau_k].sum())
    if fro_tau == 0:
        raise ValueError("Row submatrix A_tau is zero")
    sigma_max = singular_values(M.rows(tau_k))[0]
    return epsilon_k * fro_tau / (2.0 * nu_value * sigma_max * sigma_max)


def q_tilde_corollary(M: RowMatrix, nu_value: float) -> float:
    """Uniform rate q_tilde = 1 / (2 nu sigma_max^2 kappa^2)"""
    summary = spectral_summary(M)
    if summary.rank < min(M.m, M.n) or not np.isfinite(summary.kappa):
        raise NotComputableError(
            f"q_tilde not applicable: rank {summary.rank} < {min(M.m, M.n)}, "
            "kappa = inf"
        )
    return 1.0 / (2.0 * nu_value * summary.sigma_max**2 * summary.kappa**2)


def q_hat_rsk(M: RowMatrix, nu_value: float) -> float:
    """Expected rate of randomized sparse Kaczmarz, 1 / (2 nu ||A||_F^2)"""
    return 1.0 / (2.0 * nu_value * M.fro_norm_sq)


def rate_certificate(
    M: RowMatrix, x_hat: np.ndarray, lam: float, n_limit: int = DEFAULT_N_LIMIT
) -> RateCertificate:
    """nu, q and (when A has full rank) q_tilde for one problem"""
    nu_value = nu(M, x_hat, lam, n_limit)
    q = q_theorem1(M, x_hat, lam, nu_value=nu_value)
    try:
        q_tilde = q_tilde_corollary(M, nu_value)
    except NotComputableError as err:
        log.info(str(err))
        q_tilde = None
    return RateCertificate(nu=nu_value, q=q, q_tilde=q_tilde)


def per_step_q(
    M: RowMatrix, history: ConvergenceHistory, nu_value: float
) -> np.ndarray:
    """q_k for each record from its (eps, tau); NaN where none was recorded"""
    out = np.full(len(history), np.nan)
    for ix, rec in enumerate(history):
        if rec.epsilon is not None and rec.tau:
            out[ix] = q_k_theorem2(M, rec.tau, rec.epsilon, nu_value)
    return out


def verify_certificates(
    history: ConvergenceHistory, cert: RateCertificate, rtol: float = CERTIFICATE_RTOL
) -> VerificationReport:
    """Check every recorded step D_{k-1} -> D_k against

    (a) D_k <= D_{k-1} - 1/2 * step_term_k + tol
    (b) D_k <= (1 - q) * D_{k-1} + tol
    (c) D_k <= (1 - q_k) * D_{k-1} + tol, where per-step q_k are available

    with tol = rtol * max(1, D_{k-1}).
    """
    if not history.has_bregman:
        raise NotComputableError("History lacks Bregman distance records")

    ks = np.array([rec.k for rec in history], dtype=np.int64)
    dist = history.bregman
    d_prev, d_next = dist[:-1], dist[1:]
    tol = rtol * np.maximum(1.0, d_prev)

    lemma3_ok = d_next <= d_prev - 0.5 * history.step_terms[1:] + tol
    theorem1_ok = d_next <= (1.0 - cert.q) * d_prev + tol

    theorem2_ok = None
    exceedances = 0
    if cert.per_step_q is not None:
        q_k = np.asarray(cert.per_step_q, dtype=np.float64)[1:]
        known = ~np.isnan(q_k)
        theorem2_ok = np.ones_like(known)
        bound = (1.0 - q_k[known]) * d_prev[known] + tol[known]
        theorem2_ok[known] = d_next[known] <= bound
        if cert.q_tilde is not None:
            exceedances = int(np.count_nonzero(q_k[known] < cert.q_tilde))

    report = VerificationReport(
        steps=ks[1:],
        lemma3_ok=lemma3_ok,
        theorem1_ok=theorem1_ok,
        theorem2_ok=theorem2_ok,
        q_tilde_exceedances=exceedances,
    )
    if not report.ok:
        log.warning(f"Certificate violations: {report!r}")
    return report
