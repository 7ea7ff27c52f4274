"""
Boundary closures: periodic wrap-around and Dirichlet/Neumann phantom
diamonds straddling x = a or x = b.

A boundary phantom diamond has its bottom vertex on the boundary line. Its
exterior lower edge is freed and replaced by three conditions at each
diagonal stage (c_i, c_i), which lies on the boundary at t_bottom + c_i dt.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Literal, Tuple

import numpy as np

from .core import MeshConfig, SolverConfig, StageBlock, StageConstraint, StageSolver
from .errors import InvalidArgumentError, InvalidStateError
from .initialization import ZigZagState
from .problems import WaveProblem, wave_system
from .tableau import RKTableau

logger = logging.getLogger(__name__)

BC_KINDS = ("periodic", "dirichlet", "neumann")
BC_CODES = {
    "periodic": ("periodic", "periodic"),
    "dd": ("dirichlet", "dirichlet"),
    "dn": ("dirichlet", "neumann"),
    "nd": ("neumann", "dirichlet"),
    "nn": ("neumann", "neumann"),
}
_DATA_LENGTH = {"periodic": 0, "dirichlet": 3, "neumann": 2}

Side = Literal["left", "right"]


@dataclass(frozen=True, eq=False)
class BoundarySpec:
    """Boundary kind per side with its data functions of t.

    Dirichlet data is (g, g', g''), Neumann data is (h, h') where g = u and
    h = u_x on the boundary.
    """

    left: str
    right: str
    left_data: Tuple[Callable, ...] = ()
    right_data: Tuple[Callable, ...] = ()

    def __post_init__(self):
        for side, kind, data in (("left", self.left, self.left_data), ("right", self.right, self.right_data)):
            if kind not in BC_KINDS:
                raise InvalidArgumentError(f"unknown {side} boundary kind {kind!r}")
            if len(data) != _DATA_LENGTH[kind]:
                raise InvalidArgumentError(
                    f"{kind} {side} boundary needs {_DATA_LENGTH[kind]} data functions, got {len(data)}"
                )
        if (self.left == "periodic") != (self.right == "periodic"):
            raise InvalidArgumentError("periodic must be set on both sides or neither")

    @property
    def periodic(self) -> bool:
        return self.left == "periodic"

    @property
    def code(self) -> str:
        if self.periodic:
            return "periodic"
        return self.left[0] + self.right[0]

    def kind(self, side: Side) -> str:
        return self.left if side == "left" else self.right

    def data(self, side: Side) -> Tuple[Callable, ...]:
        return self.left_data if side == "left" else self.right_data


def _side_data(p: WaveProblem, kind: str, x: float):
    if kind == "dirichlet":
        return (lambda t: p.exact_u(x, t), lambda t: p.u_t(x, t), lambda t: p.u_tt(x, t))
    if kind == "neumann":
        return (lambda t: p.u_x(x, t), lambda t: p.u_tx(x, t))
    return ()


def boundary_spec(code: str, p: WaveProblem) -> BoundarySpec:
    """Build the boundary spec for a CLI code, with data from the exact solution."""
    kinds = BC_CODES.get(code.lower())
    if kinds is None:
        raise InvalidArgumentError(f"unknown boundary code {code!r}; choose from {', '.join(BC_CODES)}")
    left, right = kinds
    return BoundarySpec(left=left, right=right,
                        left_data=_side_data(p, left, p.a), right_data=_side_data(p, right, p.b))


def periodic_wrap(state: ZigZagState, spec: BoundarySpec) -> ZigZagState:
    """Copy the rightmost edge into the left halo before an aligned half-step."""
    if not spec.periodic:
        raise InvalidStateError("periodic wrap on a non-periodic boundary")
    if state.parity != 0:
        raise InvalidStateError("only aligned rows (parity 0) reach across the period")
    return state.with_halo(state.edges[-1])


def boundary_constraints(kind: str, r: int):
    cons = []
    for i in range(r):
        if kind == "dirichlet":
            cons += [StageConstraint(i, i, "Z", 0), StageConstraint(i, i, "Z", 1),
                     StageConstraint(i, i, "z_x", 2)]
        elif kind == "neumann":
            cons += [StageConstraint(i, i, "Z", 2), StageConstraint(i, i, "z_t", 2),
                     StageConstraint(i, i, "z_x", 1)]
        else:
            raise InvalidArgumentError(f"no phantom closure for {kind!r} boundaries")
    return cons


@dataclass(eq=False)
class BoundaryResult:
    inner: np.ndarray
    exterior: np.ndarray
    stages: StageBlock
    iterations: int


class BoundarySolver:
    """Phantom-diamond closure for one side of the domain."""

    def __init__(self, side: Side, spec: BoundarySpec, p: WaveProblem, mesh: MeshConfig,
                 tab: RKTableau, cfg: SolverConfig):
        if side not in ("left", "right"):
            raise InvalidArgumentError(f"side must be 'left' or 'right', got {side!r}")
        self.side, self.kind = side, spec.kind(side)
        self.data = spec.data(side)
        self.f = p.f
        self.tab, self.dt = tab, mesh.dt
        pde = wave_system(p)
        dx, dt = mesh.dx, mesh.dt
        self.solver = StageSolver(
            pde, tab, pde.K / dt - pde.L / dx, pde.K / dt + pde.L / dx, cfg,
            free_left=(side == "left"), free_bottom=(side == "right"),
            constraints=boundary_constraints(self.kind, tab.r), dx=dx, dt=dt,
        )

    def values(self, t_bottom: float) -> np.ndarray:
        """Constraint right-hand sides, three per diagonal stage."""
        tau = t_bottom + self.tab.c * self.dt
        if self.kind == "dirichlet":
            g, dg, d2g = (fn(tau) for fn in self.data)
            cols = [g, dg, d2g - self.f(g)]
        else:
            h, dh = (fn(tau) for fn in self.data)
            cols = [h, dh, dh]
        return np.stack(cols, axis=-1).reshape(-1)

    def solve(self, z_inner: np.ndarray, t_bottom: float) -> BoundaryResult:
        z_inner = np.asarray(z_inner, dtype=float)[None]
        values = self.values(t_bottom)[None]
        if self.side == "left":
            sol = self.solver.solve(None, z_inner, values=values)
            inner, exterior = sol.z_right[0], sol.z_top[0]
        else:
            sol = self.solver.solve(z_inner, None, values=values)
            inner, exterior = sol.z_top[0], sol.z_right[0]
        return BoundaryResult(inner=inner, exterior=exterior, stages=sol.stages[0],
                              iterations=int(sol.iterations[0]))


def solve_boundary_diamond(side: Side, z_inner: np.ndarray, spec: BoundarySpec, p: WaveProblem,
                           mesh: MeshConfig, tab: RKTableau, cfg: SolverConfig,
                           t_bottom: float = 0.0) -> np.ndarray:
    """In-domain upper edge of the phantom diamond whose bottom vertex is on the boundary."""
    if spec.kind(side) == "periodic":
        raise InvalidArgumentError(f"{side} boundary is periodic; no phantom diamond to solve")
    return BoundarySolver(side, spec, p, mesh, tab, cfg).solve(z_inner, t_bottom).inner
