import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tilapia_mpc.optimize import minimize_box


def quadratic(center, weights):
    center = np.asarray(center, float)
    weights = np.asarray(weights, float)

    def fun(X):
        return np.sum(weights * (np.atleast_2d(X) - center) ** 2, axis=1)
    return fun


class TestMinimizeBox:
    def test_interior_minimum(self):
        res = minimize_box(quadratic([0.3, 0.7, 0.5], [1, 10, 100]), np.full(3, 0.9))
        assert res.converged
        np.testing.assert_allclose(res.x, [0.3, 0.7, 0.5], atol=1e-5)

    def test_minimum_outside_box_lands_on_bound(self):
        res = minimize_box(quadratic([-1.0, 2.0, 0.4], [1, 1, 1]), np.full(3, 0.5))
        np.testing.assert_allclose(res.x, [0.0, 1.0, 0.4], atol=1e-6)

    def test_start_is_clipped(self):
        res = minimize_box(quadratic([0.5], [1]), np.array([3.0]), max_iter=0)
        assert res.x[0] == 1.0 and res.nit == 0

    def test_non_finite_start(self):
        res = minimize_box(lambda X: np.full(len(np.atleast_2d(X)), np.nan), np.zeros(2))
        assert not res.converged and not np.isfinite(res.fun)

    def test_non_finite_region_avoided(self):
        def fun(X):
            X = np.atleast_2d(X)
            v = np.sum((X - 0.8) ** 2, axis=1)
            return np.where(X[:, 0] > 0.6, np.inf, v)
        res = minimize_box(fun, np.array([0.1, 0.1]))
        assert res.x[0] <= 0.6 and np.isfinite(res.fun)

    def test_rosenbrock(self):
        def fun(X):
            X = np.atleast_2d(X)
            return 100 * (X[:, 1] - X[:, 0] ** 2) ** 2 + (1 - X[:, 0]) ** 2
        res = minimize_box(fun, np.array([0.1, 0.9]))
        assert res.fun < 1e-6

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1, 2), min_size=1, max_size=6),
           st.integers(0, 2**31 - 1))
    def test_descent_and_feasibility(self, center, seed):
        rng = np.random.default_rng(seed)
        w = rng.uniform(0.01, 100, len(center))
        x0 = rng.random(len(center))
        fun = quadratic(center, w)
        res = minimize_box(fun, x0)
        assert res.fun <= res.fun0
        assert res.fun0 == pytest.approx(float(fun(x0)[0]))
        assert np.all((res.x >= 0) & (res.x <= 1))
        np.testing.assert_allclose(res.x, np.clip(center, 0, 1), atol=1e-4)
