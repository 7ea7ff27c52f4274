"""Sample problems and their SymPy-derived exact solutions."""

import numpy as np
import pytest

from diamond.core import hessian_defect
from diamond.errors import InvalidArgumentError
from diamond.problems import WAVE_K, WAVE_L, pde_residual, problem_names, sample_problem, wave_system

RNG = np.random.default_rng(0)


def _random_points(p, count=100):
    x = RNG.uniform(p.a, p.b, size=count)
    t = RNG.uniform(0.0, 2.0, size=count)
    return x, t


class TestSampleProblems:
    def test_catalogue(self):
        assert problem_names() == ["Esin", "Sincos", "Coscos", "SineGordon", "EsinDD", "SincosDD",
                                   "SincosDN", "CoscosDD", "CoscosDN", "SineGordonDD"]

    @pytest.mark.parametrize("alias, name", [("sincos", "Sincos"), ("SINE-GORDON", "SineGordon"),
                                             ("sincos_dd", "SincosDD"), ("CoscosDN", "CoscosDN")])
    def test_lookup_ignores_case_and_separators(self, alias, name):
        assert sample_problem(alias).name == name

    def test_unknown_name_rejected(self):
        with pytest.raises(InvalidArgumentError):
            sample_problem("kdv")

    def test_domains_and_default_boundaries(self):
        assert sample_problem("Coscos").domain == pytest.approx((0.0, np.pi))
        assert sample_problem("SineGordon").domain == (-30.0, 30.0)
        assert sample_problem("SincosDN").domain == pytest.approx((0.2, np.pi / 3))
        assert sample_problem("SineGordonDD").domain == (-2.0, 2.0)
        assert sample_problem("Esin").bc == "periodic"
        assert sample_problem("CoscosDN").bc == "dn"

    def test_breather_values(self):
        p = sample_problem("SineGordon")
        assert p.exact_u(0.0, 0.0) == 0.0
        assert p.exact_u(0.0, np.pi / np.sqrt(2)) == pytest.approx(np.pi, abs=1e-14)

    def test_forcing_terms(self):
        assert sample_problem("Coscos").f(2.0) == pytest.approx(-2.0)
        assert sample_problem("SineGordon").f(np.pi / 2) == pytest.approx(-1.0)
        assert sample_problem("Esin").f(3.0) == 0.0

    @pytest.mark.parametrize("name", problem_names())
    def test_exact_solution_satisfies_the_equation(self, name):
        """u_tt - u_xx - f(u) vanishes up to differencing error at random points."""
        p = sample_problem(name)
        x, t = _random_points(p)
        res = pde_residual(p, x, t)
        assert np.max(np.abs(res)) <= 1e-8 * (1.0 + np.max(np.abs(p.exact_u(x, t))))

    @pytest.mark.parametrize("name", problem_names())
    def test_symbolic_derivatives_consistent(self, name):
        """u_tt - u_xx = f(u) holds exactly with the compiled second derivatives."""
        p = sample_problem(name)
        x, t = _random_points(p, 20)
        np.testing.assert_allclose(p.u_tt(x, t) - p.u_xx(x, t), p.f(p.exact_u(x, t)), atol=1e-9)


class TestWaveSystem:
    def test_structure(self):
        pde = wave_system(sample_problem("Sincos"))
        assert pde.n == 3
        np.testing.assert_array_equal(pde.K, WAVE_K)
        np.testing.assert_array_equal(pde.L, WAVE_L)

    def test_gradient_spot_value(self):
        pde = wave_system(sample_problem("SineGordon"))
        np.testing.assert_allclose(pde.grad_S(np.array([0.0, 2.0, 3.0])), [0.0, 2.0, -3.0], atol=1e-15)

    def test_hessian_spot_value(self):
        pde = wave_system(sample_problem("SineGordon"))
        np.testing.assert_allclose(pde.hess_S(np.array([np.pi / 2, 0.0, 0.0])), np.diag([0.0, 1.0, -1.0]),
                                   atol=1e-15)

    @pytest.mark.parametrize("name", problem_names())
    def test_hessian_matches_gradient(self, name):
        pde = wave_system(sample_problem(name))
        points = RNG.uniform(-2.0, 2.0, size=(10, 3))
        assert hessian_defect(pde, points) <= 1e-6

    @pytest.mark.parametrize("name", ["Sincos", "Coscos", "SineGordon"])
    def test_first_order_form_reproduces_the_wave_equation(self, name):
        """K z_t + L z_x = grad S(z) along the exact solution."""
        p = sample_problem(name)
        pde = wave_system(p)
        x, t = _random_points(p, 20)
        z = p.state(x, t)
        z_t = np.stack([p.u_t(x, t), p.u_tt(x, t), p.u_tx(x, t)], axis=-1)
        z_x = np.stack([p.u_x(x, t), p.u_tx(x, t), p.u_xx(x, t)], axis=-1)
        np.testing.assert_allclose(z_t @ pde.K.T + z_x @ pde.L.T, pde.grad_S(z), atol=1e-9)

    def test_batched_shapes(self):
        pde = wave_system(sample_problem("SineGordon"))
        z = RNG.standard_normal((4, 5, 3))
        assert pde.grad_S(z).shape == (4, 5, 3)
        assert pde.hess_S(z).shape == (4, 5, 3, 3)
