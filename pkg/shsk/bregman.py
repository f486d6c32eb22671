"""Convex-analysis toolkit for f(x) = lam*||x||_1 + 1/2*||x||_2^2

The conjugate is f*(y) = 1/2*||S_lam(y)||_2^2 with gradient S_lam, so every
quantity below is expressed through the soft shrinkage map.
"""
import logging

import numpy as np

from .types import ContractError

log = logging.getLogger(__name__)

# Allowed gap between S_lam(x*) and x for a pair to count as x* in df(x)
COUPLING_TOL = 1e-12


def check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam >= 0:
        raise ValueError(f"Regularization weight must be >= 0, got {lam}")
    return lam


def soft_shrinkage(x_star: np.ndarray, lam: float) -> np.ndarray:
    """S_lam(x) = sign(x) * max(|x| - lam, 0), componentwise"""
    lam = check_lambda(lam)
    x_star = np.asarray(x_star, dtype=np.float64)
    return np.sign(x_star) * np.maximum(np.abs(x_star) - lam, 0.0)


def objective_f(x: np.ndarray, lam: float) -> float:
    """lam*||x||_1 + 1/2*||x||_2^2"""
    lam = check_lambda(lam)
    x = np.asarray(x, dtype=np.float64)
    return float(lam * np.sum(np.abs(x)) + 0.5 * np.dot(x, x))


def conjugate_f(x_star: np.ndarray, lam: float) -> float:
    """f*(x*) = 1/2*||S_lam(x*)||_2^2"""
    s = soft_shrinkage(x_star, lam)
    return float(0.5 * np.dot(s, s))


def bregman_distance(
    x_star: np.ndarray, x: np.ndarray, y: np.ndarray, lam: float
) -> float:
    """D_f^{x*}(x, y) = f*(x*) - <x*, y> + f(y), for x = S_lam(x*)

    Raises ContractError when x is not the shrinkage of x*, i.e. when x* is not a
    subgradient of f at x.
    """
    x_star = np.asarray(x_star, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if not x_star.shape == x.shape == y.shape:
        raise ValueError(
            f"Dimension mismatch! Expected equal shapes got {x_star.shape}, "
            f"{x.shape}, {y.shape}"
        )
    gap = np.max(np.abs(soft_shrinkage(x_star, lam) - x), initial=0.0)
    if gap > COUPLING_TOL:
        raise ContractError(f"x is not S_lam(x*)! Max deviation {gap:.3e}")
    dist = conjugate_f(x_star, lam) - float(np.dot(x_star, y)) + objective_f(y, lam)
    # Nonnegative in exact arithmetic; only rounding can push it below zero
    return max(dist, 0.0)
