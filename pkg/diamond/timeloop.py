"""
Serial driver: advance the zig-zag by half-steps from initialization to
t_final.

An aligned half-step (parity 0) solves the N + 1 diamonds whose bottom
vertices are the troughs a + m dx; diamonds 0 and N straddle the boundary
and are either wrapped periodically or closed by phantom diamonds. An offset
half-step (parity 1) solves the N diamonds between them and touches no
boundary.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .boundary import BoundarySolver, BoundarySpec, periodic_wrap
from .core import MeshConfig, SolverConfig, StageSolver, transform_coeffs
from .diagnostics import error_norm
from .errors import InvalidArgumentError, SingularSystemError, SolverDivergenceError
from .initialization import ZigZagState, initialize
from .problems import WaveProblem, wave_system
from .tableau import RKTableau

logger = logging.getLogger(__name__)


@dataclass
class NewtonStats:
    solves: int = 0
    iterations: int = 0
    max_iterations: int = 0

    def record(self, iterations: np.ndarray) -> None:
        if len(iterations):
            self.solves += len(iterations)
            self.iterations += int(np.sum(iterations))
            self.max_iterations = max(self.max_iterations, int(np.max(iterations)))

    def merge(self, other: "NewtonStats") -> None:
        self.solves += other.solves
        self.iterations += other.iterations
        self.max_iterations = max(self.max_iterations, other.max_iterations)

    @property
    def mean(self) -> float:
        return self.iterations / self.solves if self.solves else 0.0


@dataclass
class RunState:
    state: ZigZagState
    step_index: int = 0
    history: List[ZigZagState] = field(default_factory=list)


@dataclass(eq=False)
class RunReport:
    problem: str
    init: str
    bc: str
    r: int
    N: int
    dx: float
    dt: float
    t_final: float
    workers: int
    half_steps: int
    error: Optional[float]
    newton: NewtonStats
    wall_seconds: float
    final_state: ZigZagState
    snapshots: List[ZigZagState] = field(default_factory=list)
    messages: int = 0
    message_values: int = 0

    def summary(self) -> dict:
        return {
            "problem": self.problem, "r": self.r, "N": self.N, "dx": self.dx, "dt": self.dt,
            "courant": self.dt / self.dx, "t_final": self.t_final, "init": self.init, "bc": self.bc,
            "workers": self.workers, "half_steps": self.half_steps,
            "error": self.error if self.error is not None else np.nan,
            "newton_solves": self.newton.solves, "newton_mean_iterations": self.newton.mean,
            "newton_max_iterations": self.newton.max_iterations, "wall_seconds": self.wall_seconds,
            "messages": self.messages,
        }


def _annotate(exc, diamond: int, step: int):
    message = f"diamond {diamond} at half-step {step}: {exc}"
    if isinstance(exc, SingularSystemError):
        return SingularSystemError(message, diamond=diamond, step=step)
    return SolverDivergenceError(message, residual=exc.residual, diamond=diamond, step=step)


class DiamondIntegrator:
    """Row solves for one problem and mesh; safe to use for a strip of a row."""

    def __init__(self, problem: WaveProblem, mesh: MeshConfig, tab: RKTableau,
                 bc: BoundarySpec, cfg: SolverConfig):
        self.problem, self.mesh, self.tab, self.bc, self.cfg = problem, mesh, tab, bc, cfg
        self.pde = wave_system(problem)
        self.coeffs = transform_coeffs(self.pde, mesh.dx, mesh.dt)
        self.interior = StageSolver.interior(self.pde, tab, self.coeffs, cfg)
        self.left = None if bc.periodic else BoundarySolver("left", bc, problem, mesh, tab, cfg)
        self.right = None if bc.periodic else BoundarySolver("right", bc, problem, mesh, tab, cfg)
        self.stats = NewtonStats()

    def _step_index(self, row_time: float) -> int:
        return int(round(row_time / (0.5 * self.mesh.dt)))

    def _solve(self, z_left, z_bottom, row_time, first_diamond):
        try:
            sol = self.interior.solve(z_left, z_bottom)
        except (SolverDivergenceError, SingularSystemError) as exc:
            raise _annotate(exc, first_diamond + (exc.diamond or 0), self._step_index(row_time)) from exc
        self.stats.record(sol.iterations)
        return sol

    def _boundary(self, solver: BoundarySolver, edge, row_time, diamond):
        try:
            res = solver.solve(edge, row_time)
        except (SolverDivergenceError, SingularSystemError) as exc:
            raise _annotate(exc, diamond, self._step_index(row_time)) from exc
        self.stats.record(np.array([res.iterations]))
        return res.inner

    def aligned_row(self, edges: np.ndarray, halo: Optional[np.ndarray], row_time: float,
                    offset: int = 0, left_end: bool = False, right_end: bool = False):
        """Aligned half-step over a strip of k cells starting at cell `offset`.

        Returns the new strip edges and the NW edge of the strip's first
        diamond, which belongs to the left neighbour (None at a closed left
        end). The last new edge is only filled at a closed right end.
        """
        first = 1 if left_end else 0
        if not left_end and halo is None:
            raise InvalidArgumentError("aligned half-step needs the edge left of the strip")
        new = np.full_like(edges, np.nan)
        nw_first = None

        z_bottom = edges[0::2][first:]
        z_left = edges[1:-1:2] if left_end else np.concatenate([np.asarray(halo)[None], edges[1:-1:2]])
        if len(z_bottom):
            sol = self._solve(z_left, z_bottom, row_time, offset + first)
            new[2 * first::2] = sol.z_right
            if left_end:
                new[1:-1:2] = sol.z_top
            else:
                nw_first = sol.z_top[0]
                new[1:-1:2] = sol.z_top[1:]

        if left_end:
            new[0] = self._boundary(self.left, edges[0], row_time, 0)
        if right_end:
            new[-1] = self._boundary(self.right, edges[-1], row_time, offset + len(edges) // 2)
        return new, nw_first

    def offset_row(self, edges: np.ndarray, row_time: float, offset: int = 0) -> np.ndarray:
        sol = self._solve(edges[0::2], edges[1::2], row_time, offset)
        new = np.empty_like(edges)
        new[0::2] = sol.z_top
        new[1::2] = sol.z_right
        return new

    def half_step(self, state: ZigZagState) -> ZigZagState:
        """Advance the whole row by dt/2 and flip the parity."""
        if state.parity == 0:
            closed = not self.bc.periodic
            if not closed:
                state = periodic_wrap(state, self.bc)
            new, nw_first = self.aligned_row(state.edges, state.halo, state.row_time,
                                             left_end=closed, right_end=closed)
            if not closed:
                new[-1] = nw_first
        else:
            new = self.offset_row(state.edges, state.row_time)
        return ZigZagState(row_time=state.row_time + 0.5 * self.mesh.dt, parity=1 - state.parity, edges=new)


def half_step(state: ZigZagState, integrator: DiamondIntegrator) -> ZigZagState:
    return integrator.half_step(state)


def check_final_time(mesh: MeshConfig) -> int:
    """Number of half-steps to t_final; t_final must be a whole number of them."""
    ratio = 2.0 * mesh.t_final / mesh.dt
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        raise InvalidArgumentError(f"t_final={mesh.t_final} is not a multiple of dt/2={mesh.dt / 2}")
    if mesh.t_final < mesh.dt * (1 - 1e-12):
        raise InvalidArgumentError(f"t_final={mesh.t_final} is shorter than one step dt={mesh.dt}")
    return int(round(ratio))


def run(problem: WaveProblem, mesh: MeshConfig, tab: RKTableau, init_method: str, bc: BoundarySpec,
        cfg: SolverConfig, snapshot_every: int = 0) -> RunReport:
    """Initialize, integrate to t_final and measure the error when the exact solution is known."""
    half_steps = check_final_time(mesh)
    integrator = DiamondIntegrator(problem, mesh, tab, bc, cfg)
    rs = RunState(state=initialize(init_method, problem, mesh, tab, cfg))
    if snapshot_every:
        rs.history.append(rs.state)
    logger.info("run %s: r=%d N=%d dt=%.6g half-steps=%d init=%s bc=%s",
                problem.name, tab.r, mesh.N, mesh.dt, half_steps, init_method, bc.code)

    start = time.perf_counter()
    while rs.step_index < half_steps:
        rs.state = integrator.half_step(rs.state)
        rs.step_index += 1
        logger.debug("half-step %d: %d solves so far, mean %.2f Newton iterations", rs.step_index,
                     integrator.stats.solves, integrator.stats.mean)
        if snapshot_every and rs.step_index % snapshot_every == 0:
            rs.history.append(rs.state)
    wall = time.perf_counter() - start
    if snapshot_every and rs.step_index % snapshot_every:
        rs.history.append(rs.state)

    error = error_norm(rs.state, problem, mesh) if problem.exact_u is not None else None
    logger.info("finished in %.3fs, error=%s", wall, f"{error:.6e}" if error is not None else "n/a")
    return RunReport(problem=problem.name, init=init_method, bc=bc.code, r=tab.r, N=mesh.N, dx=mesh.dx,
                     dt=mesh.dt, t_final=mesh.t_final, workers=1, half_steps=half_steps, error=error,
                     newton=integrator.stats, wall_seconds=wall, final_state=rs.state,
                     snapshots=rs.history)
