"""Zig-zag geometry and the exact, diamond and phantom initialisations."""

import numpy as np
import pytest

from diamond.core import MeshConfig, SolverConfig
from diamond.diagnostics import ErrorTable, error_norm, fit_order
from diamond.errors import InvalidArgumentError, InvalidStateError
from diamond.initialization import (ZigZagState, cauchy_data, init_diamond, init_exact, init_phantom, initialize,
                                    phantom_constraints, triangle_coefficients, zigzag_nodes)
from diamond.problems import sample_problem, wave_system
from diamond.tableau import gauss_tableau


def _mesh(p, N, courant=0.5):
    return MeshConfig.from_courant(p.a, p.b, N, courant, 0.0)


def _init_error(method, p, N, r):
    mesh, tab = _mesh(p, N), gauss_tableau(r)
    state = initialize(method, p, mesh, tab, SolverConfig())
    reference = init_exact(p, mesh, tab)
    return float(np.max(np.abs(state.edges - reference.edges)))


def _init_order(method, p, r, cells=(20, 40, 80)):
    table = ErrorTable(problem=p.name, init=method, bc=p.bc, r=r)
    for N in cells:
        mesh = _mesh(p, N)
        table.add(N, mesh.dx, mesh.dt, _init_error(method, p, N, r))
    return fit_order(table).order


class TestZigZagGeometry:
    def test_cauchy_data(self, sincos):
        np.testing.assert_allclose(cauchy_data(sincos, np.pi / 2), [1.0, 0.0, 0.0], atol=1e-15)

    def test_single_stage_nodes_at_edge_midpoints(self, sincos):
        """N = 4, r = 1: the first rising edge node sits halfway up, at x = dx/4."""
        mesh = _mesh(sincos, 4)
        x, t = zigzag_nodes(mesh, gauss_tableau(1), 0, 0.0)
        assert x.shape == (8, 1)
        assert x[0, 0] == pytest.approx(np.pi / 8)
        assert x[1, 0] == pytest.approx(3 * np.pi / 8)
        np.testing.assert_allclose(t, mesh.dt / 4)

    def test_offset_parity_swaps_troughs_and_peaks(self, sincos):
        """Both parities cover the same points; each edge is traversed the other way."""
        mesh, tab = _mesh(sincos, 4), gauss_tableau(2)
        x0, t0 = zigzag_nodes(mesh, tab, 0, 0.0)
        x1, t1 = zigzag_nodes(mesh, tab, 1, 0.0)
        np.testing.assert_allclose(x1, x0[:, ::-1], atol=1e-14)
        np.testing.assert_array_equal(t1, t0)

    def test_state_validation(self):
        with pytest.raises(InvalidStateError):
            ZigZagState(row_time=0.0, parity=0, edges=np.zeros((3, 2, 3)))
        with pytest.raises(InvalidStateError):
            ZigZagState(row_time=0.0, parity=2, edges=np.zeros((2, 2, 3)))


class TestInitExact:
    def test_values_match_exact_solution(self, sincos):
        mesh, tab = _mesh(sincos, 10), gauss_tableau(3)
        state = init_exact(sincos, mesh, tab)
        x, t = zigzag_nodes(mesh, tab, 0, 0.0)
        assert state.edges.shape == (20, 3, 3)
        assert np.all(np.isfinite(state.edges))
        np.testing.assert_array_equal(state.edges, sincos.state(x, t))

    def test_zero_error_before_any_step(self, sincos):
        mesh = MeshConfig.from_courant(sincos.a, sincos.b, 12, 0.5, 1.0)
        assert error_norm(init_exact(sincos, mesh, gauss_tableau(2)), sincos, mesh) == 0.0


class TestInitDiamond:
    def test_triangle_coefficients_at_diagonal_stage(self):
        pde = wave_system(sample_problem("Sincos"))
        tab, dx, dt = gauss_tableau(2), 0.2, 0.1
        K_tilde, L_tilde = triangle_coefficients(pde, tab, dx, dt)
        c1 = tab.c[0]
        scale = dx * dt * 2 * c1 / 2
        np.testing.assert_allclose(K_tilde[0, 0] * scale, dx * pde.K - c1 * dt * pde.L, atol=1e-14)
        np.testing.assert_allclose(L_tilde[0, 0] * scale, dx * pde.K + c1 * dt * pde.L, atol=1e-14)
        assert K_tilde.shape == (2, 2, 3, 3)

    def test_close_to_exact(self, sincos):
        assert _init_error("diamond", sincos, 40, 2) <= 2e-3

    @pytest.mark.parametrize("r", [1, 2])
    def test_error_shrinks_with_dt(self, r):
        """Observed order of the initial edges over three refinements is about r."""
        assert _init_order("diamond", sample_problem("Coscos"), r) >= r - 0.2

    def test_geometry_matches_exact_init(self, sincos):
        mesh, tab = _mesh(sincos, 8), gauss_tableau(2)
        a = init_diamond(sincos, mesh, tab, SolverConfig())
        b = init_exact(sincos, mesh, tab)
        assert (a.row_time, a.parity, a.edges.shape) == (b.row_time, b.parity, b.edges.shape)


class TestInitPhantom:
    @pytest.mark.parametrize("r", [1, 2, 3, 4])
    def test_constraints_balance_freed_edges(self, r):
        """2 n r freed edge values against 6 r conditions."""
        assert len(phantom_constraints(r)) == 2 * 3 * r

    def test_constraints_sit_on_the_initial_line(self):
        stages = {(con.i, con.j) for con in phantom_constraints(2)}
        assert stages == {(0, 1), (1, 0)}
        c = gauss_tableau(2).c
        assert c[0] + c[1] == pytest.approx(1.0, abs=1e-15)

    def test_close_to_exact(self, sincos):
        assert _init_error("phantom", sincos, 40, 2) <= 2e-3

    def test_error_shrinks_with_dt(self):
        assert _init_order("phantom", sample_problem("Coscos"), 2) >= 1.8

    def test_nonlinear_problem(self):
        p = sample_problem("SineGordon")
        state = init_phantom(p, _mesh(p, 80), gauss_tableau(2), SolverConfig())
        assert np.all(np.isfinite(state.edges))
        assert _init_error("phantom", p, 160, 2) < _init_error("phantom", p, 80, 2)


class TestDispatch:
    def test_unknown_method(self, sincos):
        with pytest.raises(InvalidArgumentError):
            initialize("taylor", sincos, _mesh(sincos, 4), gauss_tableau(1), SolverConfig())
