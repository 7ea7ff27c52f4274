"""Strip partitions, the threaded executor and the Amdahl fit."""

import numpy as np
import pytest

from diamond.boundary import boundary_spec
from diamond.core import MeshConfig, SolverConfig
from diamond.errors import AbortedRunError, InvalidArgumentError
from diamond.parallel import fit_serial_fraction, parallel_run, partition
from diamond.problems import sample_problem
from diamond.tableau import gauss_tableau
from diamond.timeloop import run


def _setup(name, N, r, half_steps=6, courant=0.5):
    p = sample_problem(name)
    dt = courant * (p.b - p.a) / N
    mesh = MeshConfig(a=p.a, b=p.b, N=N, dt=dt, t_final=0.5 * half_steps * dt)
    return p, mesh, gauss_tableau(r), boundary_spec(p.bc, p)


class TestPartition:
    def test_uneven_split(self):
        part = partition(10, 3)
        assert part.sizes == (3, 3, 4)
        assert part.offsets == (0, 3, 6)
        assert (part.k, part.extra) == (3, 1)
        assert part.sizes[part.root] == part.k

    @pytest.mark.parametrize("N, p, sizes", [(8, 4, (2, 2, 2, 2)), (5, 5, (1, 1, 1, 1, 1)), (7, 1, (7,))])
    def test_even_splits(self, N, p, sizes):
        assert partition(N, p).sizes == sizes

    @pytest.mark.parametrize("N, p", [(4, 5), (4, 0)])
    def test_invalid_worker_count(self, N, p):
        with pytest.raises(InvalidArgumentError):
            partition(N, p)

    @pytest.mark.parametrize("N, p", [(100, 7), (13, 4), (1000, 9)])
    def test_at_most_two_sizes(self, N, p):
        part = partition(N, p)
        assert sum(part.sizes) == N
        assert set(part.sizes) <= {N // p, N // p + 1}
        assert part.sizes.count(N // p + 1) == N - p * (N // p)


class TestSpeedupModel:
    def test_perfect_scaling(self):
        model = fit_serial_fraction([(1, 8.0), (2, 4.0), (4, 2.0), (8, 1.0)])
        assert model.B == pytest.approx(0.0, abs=1e-9)
        assert model.max_speedup > 1e8 or np.isinf(model.max_speedup)

    def test_recovers_serial_fraction(self):
        B, T1 = 0.004, 100.0
        timings = [(n, T1 * (B + (1 - B) / n)) for n in (1, 2, 4, 8, 16, 32, 64)]
        model = fit_serial_fraction(timings)
        assert model.B == pytest.approx(B, abs=1e-6)
        assert model.max_speedup == pytest.approx(250.0, rel=1e-3)

    def test_no_benefit(self):
        model = fit_serial_fraction([(1, 3.0), (2, 3.0), (4, 3.0)])
        assert model.B == pytest.approx(1.0, abs=1e-9)

    def test_speedup_curve_increasing(self):
        model = fit_serial_fraction([(1, 10.0), (4, 3.0)])
        s = model.speedup([1, 2, 4, 8, 16])
        assert s[0] == pytest.approx(1.0)
        assert np.all(np.diff(s) > 0)

    @pytest.mark.parametrize("timings", [[(1, 0.0), (2, 1.0)], [(2, 1.0), (4, 0.5)], [(1, 1.0), (1, 1.1)]])
    def test_degenerate_timings(self, timings):
        with pytest.raises(InvalidArgumentError):
            fit_serial_fraction(timings)


class TestParallelRun:
    @pytest.mark.parametrize("name", ["Sincos", "SincosDD"])
    def test_single_worker_is_bitwise_serial(self, name, cfg):
        p, mesh, tab, bc = _setup(name, 10, 2)
        serial = run(p, mesh, tab, "exact", bc, cfg)
        par = parallel_run(p, mesh, tab, "exact", bc, cfg, workers=1)
        np.testing.assert_array_equal(par.final_state.edges, serial.final_state.edges)
        assert par.error == serial.error
        assert par.final_state.parity == serial.final_state.parity

    @pytest.mark.parametrize("name", ["Sincos", "SineGordon", "SincosDD", "CoscosDN"])
    @pytest.mark.parametrize("workers", [2, 3, 4])
    def test_matches_serial(self, name, workers, cfg):
        p, mesh, tab, bc = _setup(name, 13, 2)
        serial = run(p, mesh, tab, "exact", bc, cfg)
        par = parallel_run(p, mesh, tab, "exact", bc, cfg, workers=workers)
        assert np.max(np.abs(par.final_state.edges - serial.final_state.edges)) <= 1e-12
        assert par.workers == workers

    def test_exchange_count(self, cfg):
        """Two messages per worker boundary on every aligned half-step, none on offset ones."""
        p, mesh, tab, bc = _setup("Sincos", 12, 1, half_steps=5)
        par = parallel_run(p, mesh, tab, "exact", bc, cfg, workers=3)
        assert par.messages == 3 * 2 * 3
        assert par.message_values == 1 * 3

        p, mesh, tab, bc = _setup("SincosDD", 12, 2, half_steps=4)
        par = parallel_run(p, mesh, tab, "exact", bc, cfg, workers=3)
        assert par.messages == 2 * 2 * 2
        assert par.message_values == 2 * 3

    def test_gathered_snapshots_match_serial(self, cfg):
        p, mesh, tab, bc = _setup("Sincos", 9, 1, half_steps=5)
        serial = run(p, mesh, tab, "exact", bc, cfg, snapshot_every=2)
        par = parallel_run(p, mesh, tab, "exact", bc, cfg, workers=2, snapshot_every=2)
        assert len(par.snapshots) == len(serial.snapshots)
        for a, b in zip(par.snapshots, serial.snapshots):
            assert a.row_time == pytest.approx(b.row_time)
            assert a.parity == b.parity
            np.testing.assert_allclose(a.edges, b.edges, atol=1e-12)

    def test_worker_failure_aborts_the_run(self):
        p, mesh, tab, bc = _setup("SineGordon", 20, 2)
        cfg = SolverConfig(tol=1e-14, max_iter=1, fd_fallback=False)
        with pytest.raises(AbortedRunError) as info:
            parallel_run(p, mesh, tab, "exact", bc, cfg, workers=4)
        assert info.value.worker in range(4)
        assert info.value.step == 0

    def test_zero_workers_rejected(self, cfg):
        p, mesh, tab, bc = _setup("Sincos", 4, 1)
        with pytest.raises(InvalidArgumentError):
            parallel_run(p, mesh, tab, "exact", bc, cfg, workers=0)

    @pytest.mark.slow
    def test_large_sine_gordon_run(self, cfg):
        """r = 5, N = 1000, 1000 steps of dt = 0.05: every worker count gives the same state."""
        p = sample_problem("SineGordon")
        mesh = MeshConfig(a=p.a, b=p.b, N=1000, dt=0.05, t_final=50.0)
        tab, bc = gauss_tableau(5), boundary_spec("periodic", p)
        states = [parallel_run(p, mesh, tab, "exact", bc, cfg, workers=w).final_state.edges for w in (1, 2, 4)]
        for other in states[1:]:
            assert np.max(np.abs(other - states[0])) <= 1e-12
