"""Batched damped Newton: convergence, line search and failure reporting."""

import numpy as np
import pytest

from diamond.errors import SingularSystemError
from diamond.newton import finite_difference_jacobian, newton_solve


class _Quadratic:
    """y_k^2 = a_k for every batch item, one unknown each."""

    def __init__(self, a):
        self.a = np.asarray(a, dtype=float)
        self.scale = np.ones(len(self.a))

    def residual(self, y, idx):
        return y ** 2 - self.a[idx, None]

    def jacobian(self, y, idx):
        return 2.0 * y[:, :, None]


class TestNewton:
    def test_batch_converges_per_item(self):
        system = _Quadratic([2.0, 9.0, 0.25])
        result = newton_solve(system, np.ones((3, 1)), 1e-14, 50)
        assert result.converged.all()
        np.testing.assert_allclose(result.y[:, 0], [np.sqrt(2.0), 3.0, 0.5], rtol=1e-14)
        assert np.all(result.iterations > 0)

    def test_line_search_rejects_overshoot(self):
        """The full step from 1 towards sqrt(9) overshoots to 5; one halving lands on 3."""
        result = newton_solve(_Quadratic([9.0]), np.ones((1, 1)), 1e-14, 50)
        assert result.iterations[0] == 1
        assert result.y[0, 0] == 3.0

    def test_converged_items_are_left_alone(self):
        """An item that starts at its root takes no iterations."""
        system = _Quadratic([4.0, 2.0])
        result = newton_solve(system, np.array([[2.0], [1.0]]), 1e-14, 50)
        assert result.iterations[0] == 0
        assert result.y[0, 0] == 2.0

    def test_subset_of_items(self):
        system = _Quadratic([4.0, 2.0, 9.0])
        result = newton_solve(system, np.ones((3, 1)), 1e-14, 50, items=np.array([0, 2]))
        np.testing.assert_allclose(result.y[:, 0], [2.0, 3.0], rtol=1e-14)

    def test_iteration_cap_reports_failure(self):
        system = _Quadratic([1e6])
        result = newton_solve(system, np.ones((1, 1)), 1e-14, 2)
        assert not result.converged[0]
        assert result.residual[0] > result.threshold[0]

    def test_singular_jacobian_raises(self):
        system = _Quadratic([1.0, 1.0])
        with pytest.raises(SingularSystemError) as info:
            newton_solve(system, np.array([[1.0], [0.0]]), 1e-14, 5)
        assert info.value.diamond == 1

    def test_finite_difference_jacobian(self):
        system = _Quadratic([2.0, 3.0])
        y = np.array([[1.5], [-0.5]])
        idx = np.arange(2)
        np.testing.assert_allclose(finite_difference_jacobian(system.residual, y, idx),
                                   system.jacobian(y, idx), rtol=1e-9)
