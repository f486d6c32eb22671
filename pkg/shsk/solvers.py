"""Surrogate hyperplane sparse Kaczmarz iteration

Every method here shares one step: given a weight vector eta, project the dual
iterate onto the surrogate hyperplane eta^T A x = eta^T b

    x*_{k+1} = x*_k + eta^T r_k / ||A^T eta||^2 * A^T eta
    x_{k+1}  = S_lam(x*_{k+1})

and the methods differ only in how eta is chosen. The strategies below cover the
full residual, the adaptive partial residual, single-row selections (greedy,
randomized, cyclic) and Gaussian weights.
"""
import logging
import time
from typing import Optional, Tuple

import numpy as np

from .bregman import bregman_distance, soft_shrinkage
from .linalg import residual, transpose_apply
from .problems import rse
from .types import (
    ConvergenceHistory,
    DegenerateStepError,
    HistoryRecord,
    Problem,
    SolverState,
    StopCriteria,
    StopReason,
)

log = logging.getLogger(__name__)

GAUSSIAN_RESAMPLES = 8
STRATEGY_NAMES = ("shskr", "shskpr", "greedy", "rsk", "cyclic", "gaussian")


def _residual_scores(state: SolverState, problem: Problem) -> np.ndarray:
    """|r_i|^2 / (||a_i||^2 * ||r||^2) per row, -inf on zero rows

    The same normalized scores feed the greedy argmax, eps_k and tau_k so the
    partial residual rule at theta=1 selects exactly the greedy row.
    """
    r = state.r
    rn2 = float(np.dot(r, r))
    if rn2 == 0:
        raise ValueError("Zero residual: the iterate already solves A x = b")
    norms = problem.A.row_norm_sq
    active = norms > 0
    scores = np.full(r.shape, -np.inf)
    scores[active] = r[active] ** 2 / norms[active]
    return scores / rn2


def weight_residual(state: SolverState) -> np.ndarray:
    """eta_k = b - A x_k"""
    return state.r


def epsilon_threshold(state: SolverState, problem: Problem, theta: float) -> float:
    """eps_k = theta/||r||^2 * max_i |r_i|^2/||a_i||^2 + (1 - theta)/||A||_F^2"""
    theta = _check_theta(theta)
    top = float(np.max(_residual_scores(state, problem)))
    epsilon = theta * top + (1.0 - theta) / problem.A.fro_norm_sq
    # rounding may lift eps one ulp above the largest score when all scores tie
    return min(epsilon, top)


def index_set_tau(state: SolverState, problem: Problem, epsilon: float) -> np.ndarray:
    """tau_k = {i : |r_i|^2 >= eps_k * ||r||^2 * ||a_i||^2}, zero rows excluded"""
    scores = _residual_scores(state, problem)
    tau = np.flatnonzero(scores >= epsilon)
    if tau.size == 0:
        raise RuntimeError(
            f"Internal error: empty row index set at k={state.k}, eps={epsilon!r}"
        )
    return tau


def _partial_residual(
    state: SolverState, problem: Problem, theta: float
) -> Tuple[np.ndarray, float, np.ndarray]:
    epsilon = epsilon_threshold(state, problem, theta)
    tau = index_set_tau(state, problem, epsilon)
    eta = np.zeros_like(state.r)
    eta[tau] = state.r[tau]
    return eta, epsilon, tau


def weight_partial_residual(
    state: SolverState, problem: Problem, theta: float
) -> np.ndarray:
    """eta_k = sum_{i in tau_k} r_i e_i"""
    eta, _, _ = _partial_residual(state, problem, theta)
    return eta


def weight_single_row(state: SolverState, problem: Problem, rule) -> np.ndarray:
    """e_i for the row chosen by a GreedyRow, RandomRow or CyclicRow rule"""
    if problem.A.fro_norm_sq == 0:
        raise ValueError("All-zero matrix has no row to select")
    eta = np.zeros(problem.A.m)
    eta[rule.select_row(state, problem)] = 1.0
    return eta


def weight_gaussian(state: SolverState, rng: np.random.Generator) -> np.ndarray:
    """m independent standard normal weights"""
    return rng.standard_normal(state.r.shape[0])


def _check_theta(theta) -> float:
    if theta is None:
        raise ValueError("theta is required for the partial residual strategy")
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta out of range! Expected [0, 1] got {theta}")
    return theta


class WeightStrategy:
    """Rule producing eta_k from the current state"""

    name = ""
    # Re-draw eta instead of stopping when A^T eta vanishes
    resamples = False

    def reset(self):
        """Restore the initial internal state (cursor, RNG stream)"""

    def weights(self, state: SolverState, problem: Problem) -> np.ndarray:
        raise NotImplementedError

    @property
    def label(self) -> str:
        return self.name.upper()

    def __repr__(self):
        return self.label


class Residual(WeightStrategy):
    name = "shskr"

    def weights(self, state, problem):
        return weight_residual(state)


class PartialResidual(WeightStrategy):
    name = "shskpr"

    def __init__(self, theta: float):
        self.theta = _check_theta(theta)
        self.last_epsilon: Optional[float] = None
        self.last_tau: Optional[np.ndarray] = None

    def reset(self):
        self.last_epsilon = None
        self.last_tau = None

    def weights(self, state, problem):
        eta, self.last_epsilon, self.last_tau = _partial_residual(
            state, problem, self.theta
        )
        log.debug(f"k={state.k} eps={self.last_epsilon:.4e} |tau|={self.last_tau.size}")
        return eta

    @property
    def label(self):
        return f"SHSKPR(theta={self.theta:g})"


class GreedyRow(WeightStrategy):
    """Largest |r_i|^2 / ||a_i||^2, ties to the smallest row index"""

    name = "greedy"

    def select_row(self, state, problem) -> int:
        return int(np.argmax(_residual_scores(state, problem)))

    def weights(self, state, problem):
        return weight_single_row(state, problem, self)


class RandomRow(WeightStrategy):
    """Row i with probability ||a_i||^2 / ||A||_F^2"""

    name = "rsk"

    def __init__(self, seed=None):
        self.seed = seed
        self.reset()

    def reset(self):
        self.rng = np.random.default_rng(self.seed)
        self._cdf = None
        self._cdf_owner = None

    def select_row(self, state, problem) -> int:
        A = problem.A
        if self._cdf_owner is not A:
            cdf = np.cumsum(A.row_norm_sq / A.fro_norm_sq)
            # trailing zero rows share the last active row's cdf value
            cdf[np.flatnonzero(A.row_norm_sq)[-1] :] = 1.0
            self._cdf, self._cdf_owner = cdf, A
        # side="right" skips zero rows, whose cdf step is empty
        return int(np.searchsorted(self._cdf, self.rng.random(), side="right"))

    def weights(self, state, problem):
        return weight_single_row(state, problem, self)


class CyclicRow(WeightStrategy):
    """Rows 0, 1, ..., m-1, 0, ... skipping zero rows"""

    name = "cyclic"

    def __init__(self, cursor: int = 0):
        self.start = cursor
        self.reset()

    def reset(self):
        self.cursor = self.start

    def select_row(self, state, problem) -> int:
        active = np.flatnonzero(problem.A.row_norm_sq > 0)
        ix = int(active[self.cursor % active.size])
        self.cursor += 1
        return ix

    def weights(self, state, problem):
        return weight_single_row(state, problem, self)


class GaussianRow(WeightStrategy):
    name = "gaussian"
    resamples = True

    def __init__(self, seed=None):
        self.seed = seed
        self.reset()

    def reset(self):
        self.rng = np.random.default_rng(self.seed)

    def weights(self, state, problem):
        return weight_gaussian(state, self.rng)


def make_strategy(
    name: str, theta: Optional[float] = None, seed=None
) -> WeightStrategy:
    """Build a strategy from its command-line name"""
    name = name.lower()
    if name not in STRATEGY_NAMES:
        raise ValueError(
            f"Unknown strategy! Expected one of {STRATEGY_NAMES} got {name!r}"
        )
    if name == "shskpr":
        return PartialResidual(theta)
    if theta is not None:
        raise ValueError(f"theta only applies to shskpr, got theta={theta} for {name}")
    if name == "shskr":
        return Residual()
    if name == "greedy":
        return GreedyRow()
    if name == "rsk":
        return RandomRow(seed)
    if name == "cyclic":
        return CyclicRow()
    return GaussianRow(seed)


def initial_state(problem: Problem) -> SolverState:
    """x_0 = x*_0 = 0"""
    n = problem.A.n
    return SolverState(k=0, x_star=np.zeros(n), x=np.zeros(n), r=problem.b.copy())


def shsk_step(
    state: SolverState, eta: np.ndarray, problem: Problem, tol_step: float = 1e-28
) -> SolverState:
    """One Bregman projection onto the surrogate hyperplane eta^T A x = eta^T b

    A single-row eta takes the closed-form row update; the step is invariant to
    the scale of eta, so the check for a vanishing direction uses ||a_i||^2 there.
    """
    A = problem.A
    eta = np.asarray(eta, dtype=np.float64)
    if eta.shape != (A.m,):
        raise ValueError(f"Dimension mismatch for eta! Expected {A.m} got {eta.shape}")
    support = np.flatnonzero(eta)
    if support.size == 0:
        raise DegenerateStepError(f"Zero weight vector at k={state.k}")

    if support.size == 1:
        i = int(support[0])
        norm_sq = A.row_norm_sq[i]
        if norm_sq <= tol_step:
            raise DegenerateStepError(f"Zero row {i} selected at k={state.k}")
        r_i = state.r[i]
        x_star = state.x_star + (r_i / norm_sq) * A.row(i)
        step_term = r_i * r_i / norm_sq
    else:
        direction = transpose_apply(A, eta)
        dir_norm_sq = float(np.dot(direction, direction))
        if dir_norm_sq <= tol_step:
            raise DegenerateStepError(
                f"||A^T eta||^2 = {dir_norm_sq:.3e} <= {tol_step:.1e} at k={state.k}"
            )
        inner = float(np.dot(eta, state.r))
        x_star = state.x_star + (inner / dir_norm_sq) * direction
        step_term = inner * inner / dir_norm_sq

    x = soft_shrinkage(x_star, problem.lam)
    return SolverState(
        k=state.k + 1,
        x_star=x_star,
        x=x,
        r=residual(A, x, problem.b),
        step_term=float(step_term),
    )


def averaged_partial_residual_update(
    state: SolverState, tau, problem: Problem
) -> np.ndarray:
    """Partial residual step written as an averaged block projection

        x*_{k+1} = x*_k + t_k * sum_{i in tau} w_i * r_i / ||a_i||^2 * a_i

    with t_k = ||eta||^2 ||A_tau||_F^2 / ||A^T eta||^2 and
    w_i = ||a_i||^2 / ||A_tau||_F^2. Algebraically equal to shsk_step with
    eta = r restricted to tau; returns x*_{k+1}.
    """
    A = problem.A
    tau = np.asarray(tau, dtype=np.intp)
    r_tau = state.r[tau]
    norms_tau = A.row_norm_sq[tau]
    fro_tau = float(norms_tau.sum())

    eta = np.zeros(A.m)
    eta[tau] = r_tau
    direction = transpose_apply(A, eta)
    t_k = float(np.dot(r_tau, r_tau)) * fro_tau / float(np.dot(direction, direction))

    omega = norms_tau / fro_tau
    scaled = np.zeros(A.m)
    scaled[tau] = omega * r_tau / norms_tau
    return state.x_star + t_k * transpose_apply(A, scaled)


def _check_runnable(problem: Problem):
    A = problem.A
    if A.fro_norm_sq == 0:
        raise ValueError("All-zero matrix: no row can be projected on")
    zero_rows = np.flatnonzero(A.row_norm_sq == 0)
    bad = zero_rows[problem.b[zero_rows] != 0]
    if bad.size:
        raise ValueError(
            f"Inconsistent system! Zero rows {bad[:5].tolist()} have nonzero b_i"
        )


def run(
    problem: Problem,
    strategy: WeightStrategy,
    stop: Optional[StopCriteria] = None,
    record_bregman: bool = True,
    record_tau: bool = False,
) -> Tuple[SolverState, ConvergenceHistory]:
    """Iterate from x_0 = x*_0 = 0 until a stopping criterion fires

    RSE against the reference solution is the stopping rule when the problem
    carries one and is noiseless; otherwise ||r||/||b|| < res_tol. The history has
    one record per iteration, k=0 included. With record_tau, partial residual
    runs also record (eps_k, tau_k) on the record of the step they produced.
    """
    stop = stop or StopCriteria()
    _check_runnable(problem)
    strategy.reset()

    ref = problem.reference
    has_ref = ref is not None and np.any(ref)
    use_rse = has_ref and problem.noise_level == 0
    if has_ref and not use_rse:
        log.warning(
            f"Noise level {problem.noise_level} > 0: stopping on residual or max_iters"
        )
    keep_bregman = record_bregman and has_ref
    b_norm = float(np.linalg.norm(problem.b))

    history = ConvergenceHistory()
    t0 = time.perf_counter()

    def record(state: SolverState, epsilon=None, tau=None) -> HistoryRecord:
        rec = HistoryRecord(
            k=state.k,
            residual_norm=state.residual_norm,
            rse=rse(state.x, ref) if has_ref else None,
            bregman=(
                bregman_distance(state.x_star, state.x, ref, problem.lam)
                if keep_bregman
                else None
            ),
            step_term=state.step_term,
            wall_time=time.perf_counter() - t0,
            epsilon=epsilon,
            tau=tau,
        )
        history.append(rec)
        return rec

    state = initial_state(problem)
    rec = record(state)
    log.info(f"Running {strategy.label} on {problem!r}")

    reason = None
    while reason is None:
        if rec.residual_norm == 0:
            reason = StopReason.EXACT_RESIDUAL
        elif use_rse and rec.rse < stop.rse_tol:
            reason = StopReason.RSE_TOL
        elif not use_rse and rec.residual_norm < stop.res_tol * b_norm:
            reason = StopReason.RES_TOL
        elif state.k >= stop.max_iters:
            reason = StopReason.MAX_ITERS
        if reason is not None:
            break

        eta = strategy.weights(state, problem)
        try:
            new_state = shsk_step(state, eta, problem, stop.tol_step)
        except DegenerateStepError as err:
            if not strategy.resamples:
                log.info(f"Degenerate direction, treating as converged: {err}")
                reason = StopReason.EXACT_RESIDUAL
                break
            new_state = _resample(state, problem, strategy, stop.tol_step, err)

        state = new_state
        epsilon = tau = None
        if record_tau and isinstance(strategy, PartialResidual):
            epsilon = strategy.last_epsilon
            tau = tuple(int(i) for i in strategy.last_tau)
        rec = record(state, epsilon, tau)
        log.debug(
            f"k={state.k} |r|={rec.residual_norm:.6e} rse={rec.rse} "
            f"term={state.step_term:.6e}"
        )

    history.stop_reason = reason
    log.info(
        f"{strategy.label} stopped after {state.k} iterations: {reason.value}, "
        f"|r|={rec.residual_norm:.3e}"
    )
    return state, history


def _resample(state, problem, strategy, tol_step, err) -> SolverState:
    for attempt in range(1, GAUSSIAN_RESAMPLES + 1):
        log.warning(f"Resampling weights ({attempt}/{GAUSSIAN_RESAMPLES}): {err}")
        try:
            return shsk_step(state, strategy.weights(state, problem), problem, tol_step)
        except DegenerateStepError as again:
            err = again
    raise DegenerateStepError(
        f"No usable direction after {GAUSSIAN_RESAMPLES} resamples: {err}"
    )
