import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shsk.bregman import (
    bregman_distance,
    conjugate_f,
    objective_f,
    soft_shrinkage,
)
from shsk.types import ContractError

LAM = 1.5
vectors = st.lists(st.floats(-10, 10), min_size=1, max_size=8)


def grid_conjugate(y, lam, grid=np.linspace(-12, 12, 240001)):
    """sup_x <y, x> - f(x), maximized per coordinate over a grid"""
    total = 0.0
    for y_j in np.atleast_1d(y):
        total += np.max(y_j * grid - lam * np.abs(grid) - 0.5 * grid**2)
    return total


def test_soft_shrinkage():
    np.testing.assert_array_equal(
        soft_shrinkage(np.array([3.0, 1.0, -2.0]), LAM), [1.5, 0.0, -0.5]
    )
    x = np.array([0.3, -4.0, 0.0])
    np.testing.assert_array_equal(soft_shrinkage(x, 0.0), x)
    np.testing.assert_array_equal(soft_shrinkage(np.zeros(3), 2.0), np.zeros(3))


def test_soft_shrinkage_zeroes_small_entries(rng):
    x = rng.uniform(-3, 3, size=200)
    out = soft_shrinkage(x, LAM)
    assert np.all(out[np.abs(x) <= LAM] == 0.0)


def test_soft_shrinkage_negative_lambda():
    with pytest.raises(ValueError):
        _ = soft_shrinkage(np.ones(2), -0.1)


def test_objective_f():
    assert objective_f(np.array([1.0, -1.0]), LAM) == 4.0
    assert objective_f(np.zeros(3), LAM) == 0.0
    assert objective_f(np.array([2.0]), 0.0) == 2.0


def test_conjugate_f():
    assert conjugate_f(np.array([3.0, 0.0]), LAM) == pytest.approx(1.125)
    assert conjugate_f(np.array([1.0]), LAM) == 0.0
    x = np.array([1.0, -2.0, 0.5])
    assert conjugate_f(x, 0.0) == pytest.approx(0.5 * np.dot(x, x))


def test_conjugate_matches_grid_oracle(rng):
    for _ in range(1000):
        y = rng.uniform(-10, 10, size=1)
        lam = rng.uniform(0, 3)
        assert conjugate_f(y, lam) == pytest.approx(grid_conjugate(y, lam), abs=1e-6)


def test_conjugate_gradient_is_shrinkage(rng):
    h = 1e-6
    for _ in range(200):
        y = rng.uniform(-5, 5, size=6)
        grad = soft_shrinkage(y, LAM)
        for j in range(y.size):
            if abs(abs(y[j]) - LAM) < 1e-3:
                continue
            e = np.zeros_like(y)
            e[j] = h
            fd = (conjugate_f(y + e, LAM) - conjugate_f(y - e, LAM)) / (2 * h)
            assert abs(fd - grad[j]) <= 1e-5


def test_bregman_distance_zero_at_base_point():
    x_star = np.array([3.0, -0.5, -2.0])
    x = soft_shrinkage(x_star, LAM)
    assert bregman_distance(x_star, x, x, LAM) == pytest.approx(0.0, abs=1e-14)


def test_bregman_distance_example():
    dist = bregman_distance(np.array([3.0]), np.array([1.5]), np.array([0.0]), LAM)
    assert dist == pytest.approx(1.125)


def test_bregman_distance_lower_bound(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 10))
        x_star = rng.uniform(-6, 6, size=n)
        x = soft_shrinkage(x_star, LAM)
        y = rng.uniform(-6, 6, size=n) * (rng.random(n) < 0.5)
        diff = x - y
        assert bregman_distance(x_star, x, y, LAM) >= 0.5 * np.dot(diff, diff) - 1e-10


def test_bregman_distance_contract():
    with pytest.raises(ContractError):
        _ = bregman_distance(np.array([3.0]), np.array([3.0]), np.array([0.0]), LAM)


def test_bregman_distance_shape_mismatch():
    with pytest.raises(ValueError):
        _ = bregman_distance(np.zeros(2), np.zeros(2), np.zeros(3), LAM)


@settings(deadline=None)
@given(vectors, vectors, st.floats(0, 5))
def test_shrinkage_is_nonexpansive(u, v, lam):
    k = min(len(u), len(v))
    u, v = np.array(u[:k]), np.array(v[:k])
    lhs = np.linalg.norm(soft_shrinkage(u, lam) - soft_shrinkage(v, lam))
    assert lhs <= np.linalg.norm(u - v) + 1e-12
