"""
The zig-zag state and the three ways of producing the first one from
Cauchy data at t = 0.

The zig-zag holds 2N edges. Each edge is stored from its lower end (trough)
to its upper end (peak); node q sits at trough + c_q (peak - trough) and at
time row_time + c_q dt/2. With parity 0 the troughs are at a + m dx, edge
2m rises to the peak at a + (m + 1/2) dx and edge 2m + 1 falls back to
a + (m + 1) dx. With parity 1 the troughs are at a + (m + 1/2) dx and the
peaks at a + m dx.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import (MeshConfig, SolverConfig, StageConstraint, StageSolver, diamond_coordinates)
from .errors import (InvalidArgumentError, InvalidStateError, SolverDivergenceError,
                     UnsupportedOperationError)
from .problems import WaveProblem, wave_system
from .tableau import RKTableau

logger = logging.getLogger(__name__)

INIT_METHODS = ("exact", "diamond", "phantom")


@dataclass(eq=False)
class ZigZagState:
    row_time: float
    parity: int
    edges: np.ndarray
    halo: Optional[np.ndarray] = None

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        if self.edges.ndim != 3 or self.edges.shape[0] % 2 or self.edges.shape[0] == 0:
            raise InvalidStateError(f"zig-zag needs 2N edges of shape (r, n), got {self.edges.shape}")
        if self.parity not in (0, 1):
            raise InvalidStateError(f"parity must be 0 or 1, got {self.parity}")

    @property
    def N(self) -> int:
        return self.edges.shape[0] // 2

    @property
    def r(self) -> int:
        return self.edges.shape[1]

    def with_halo(self, halo: np.ndarray) -> "ZigZagState":
        return replace(self, halo=np.array(halo, dtype=float))


def zigzag_ends(mesh: MeshConfig, parity: int):
    """x of the trough and peak end of every zig-zag edge."""
    a, dx, m = mesh.a, mesh.dx, np.arange(mesh.N)
    trough, peak = np.empty(2 * mesh.N), np.empty(2 * mesh.N)
    if parity == 0:
        trough[0::2], trough[1::2] = a + m * dx, a + (m + 1) * dx
        peak[0::2] = peak[1::2] = a + (m + 0.5) * dx
    else:
        trough[0::2] = trough[1::2] = a + (m + 0.5) * dx
        peak[0::2], peak[1::2] = a + m * dx, a + (m + 1) * dx
    return trough, peak


def zigzag_nodes(mesh: MeshConfig, tab: RKTableau, parity: int, row_time: float):
    """(x, t) of all 2N x r zig-zag nodes."""
    trough, peak = zigzag_ends(mesh, parity)
    x = trough[:, None] + tab.c[None, :] * (peak - trough)[:, None]
    t = row_time + 0.5 * mesh.dt * np.broadcast_to(tab.c, x.shape)
    return x, np.array(t)


def _require_exact(p: WaveProblem):
    if getattr(p, "exact_u", None) is None:
        raise UnsupportedOperationError(f"problem {p.name!r} has no exact solution")


def cauchy_data(p: WaveProblem, x):
    """z = (u, u_t, u_x) at t = 0."""
    if getattr(p, "u_t", None) is None or getattr(p, "u_x", None) is None:
        raise UnsupportedOperationError(f"problem {p.name!r} lacks Cauchy data")
    return p.state(x, np.zeros_like(np.asarray(x, dtype=float)))


def init_exact(p: WaveProblem, mesh: MeshConfig, tab: RKTableau) -> ZigZagState:
    """Exact values at every node of the zig-zag spanning [0, dt/2]."""
    _require_exact(p)
    x, t = zigzag_nodes(mesh, tab, 0, 0.0)
    return ZigZagState(row_time=0.0, parity=0, edges=p.state(x, t))


def triangle_coefficients(pde, tab: RKTableau, dx: float, dt: float):
    """Per-stage K~ and L~ for the half-diamond above t = 0."""
    xt = tab.c[:, None, None, None]
    tt = tab.c[None, :, None, None]
    factor = 2.0 / (dx * dt * (xt + tt))
    K_tilde = factor * (dx * pde.K - tt * dt * pde.L)
    L_tilde = factor * (dx * pde.K + xt * dt * pde.L)
    return K_tilde, L_tilde


def init_diamond(p: WaveProblem, mesh: MeshConfig, tab: RKTableau, cfg: SolverConfig) -> ZigZagState:
    """Solve the N triangles resting on t = 0, each mapped to the unit square."""
    pde = wave_system(p)
    dx, dt, c = mesh.dx, mesh.dt, tab.c
    x_c = mesh.a + (np.arange(mesh.N) + 0.5) * dx

    z_left = cauchy_data(p, x_c[:, None] - 0.5 * dx * c[None, :])
    z_bottom = cauchy_data(p, x_c[:, None] + 0.5 * dx * c[None, :])

    K_tilde, L_tilde = triangle_coefficients(pde, tab, dx, dt)
    solver = StageSolver(pde, tab, K_tilde, L_tilde, cfg)
    try:
        sol = solver.solve(z_left, z_bottom)
    except SolverDivergenceError as exc:
        raise SolverDivergenceError(f"initial triangle {exc.diamond}: {exc}", residual=exc.residual,
                                    diamond=exc.diamond, step=0) from exc

    edges = np.empty((2 * mesh.N, tab.r, pde.n))
    edges[0::2] = sol.z_top
    edges[1::2] = sol.z_right
    logger.debug("diamond init: %d triangles, %d Newton iterations", mesh.N, int(sol.iterations.sum()))
    return ZigZagState(row_time=0.0, parity=0, edges=edges)


def phantom_constraints(r: int):
    """Six conditions at each stage on the t = 0 line (x~ + t~ = 1)."""
    cons = []
    for i in range(r):
        j = r - 1 - i
        cons += [StageConstraint(i, j, "Z", k) for k in range(3)]
        cons += [StageConstraint(i, j, "z_x", 1), StageConstraint(i, j, "z_x", 2),
                 StageConstraint(i, j, "z_t", 2)]
    return cons


def init_phantom(p: WaveProblem, mesh: MeshConfig, tab: RKTableau, cfg: SolverConfig) -> ZigZagState:
    """Phantom diamonds centred on t = 0 with both lower edges freed."""
    for attr in ("u_tx", "u_xx"):
        if getattr(p, attr, None) is None:
            raise UnsupportedOperationError(f"phantom initialization needs {attr} of the initial data")
    pde = wave_system(p)
    dx, dt, c, r = mesh.dx, mesh.dt, tab.c, tab.r
    x_c = mesh.a + (np.arange(mesh.N) + 0.5) * dx
    t_b = -0.5 * dt

    # data on the t = 0 stages (c_i, c_{r-1-i})
    xs = x_c[:, None] + 0.5 * dx * (2.0 * c[None, :] - 1.0)
    zero = np.zeros_like(xs)
    u_tx, u_xx = p.u_tx(xs, zero), p.u_xx(xs, zero)
    z0 = cauchy_data(p, xs)
    values = np.stack([z0[..., 0], z0[..., 1], z0[..., 2], u_tx, u_xx, u_tx], axis=-1).reshape(mesh.N, -1)

    def taylor(xt, tt):
        x, t = diamond_coordinates(x_c.reshape((-1,) + (1,) * np.ndim(xt)), t_b, dx, dt, xt, tt)
        z = cauchy_data(p, x)
        u_tt = p.u_xx(x, 0 * x) + p.f(z[..., 0])
        dz = np.stack([z[..., 1], u_tt, p.u_tx(x, 0 * x)], axis=-1)
        return z + t[..., None] * dz

    guess_left = taylor(np.zeros(r), c)
    guess_bottom = taylor(c, np.zeros(r))
    guess_Z = taylor(c[:, None], c[None, :])

    solver = StageSolver(pde, tab, pde.K / dt - pde.L / dx, pde.K / dt + pde.L / dx, cfg,
                         free_left=True, free_bottom=True, constraints=phantom_constraints(r), dx=dx, dt=dt)
    try:
        sol = solver.solve(None, None, values=values, guess_left=guess_left,
                           guess_bottom=guess_bottom, guess_Z=guess_Z)
    except SolverDivergenceError as exc:
        raise SolverDivergenceError(f"initial phantom diamond {exc.diamond}: {exc}", residual=exc.residual,
                                    diamond=exc.diamond, step=0) from exc

    edges = np.empty((2 * mesh.N, r, pde.n))
    edges[0::2] = sol.z_top
    edges[1::2] = sol.z_right
    logger.debug("phantom init: %d diamonds, %d Newton iterations", mesh.N, int(sol.iterations.sum()))
    return ZigZagState(row_time=0.0, parity=0, edges=edges)


def initialize(method: str, p: WaveProblem, mesh: MeshConfig, tab: RKTableau,
               cfg: SolverConfig) -> ZigZagState:
    if method == "exact":
        return init_exact(p, mesh, tab)
    if method == "diamond":
        return init_diamond(p, mesh, tab, cfg)
    if method == "phantom":
        return init_phantom(p, mesh, tab, cfg)
    raise InvalidArgumentError(f"unknown init method {method!r}; choose from {', '.join(INIT_METHODS)}")
