"""
PDE class, diamond-to-square transform and the per-diamond stage solve.

A diamond with bottom vertex (x_B, t_B), width dx and height dt is mapped to
the unit square by x~ = x/dx + t/dt, t~ = -x/dx + t/dt (shifted so the bottom
vertex goes to the origin). Edges of the square and of the diamond:

    x~ = 0  left   (SW edge)        t~ = 0  bottom (SE edge)
    x~ = 1  right  (NE edge)        t~ = 1  top    (NW edge)

Stage values Z[i, j], X[i, j], T[i, j] sit at (x~, t~) = (c_i, c_j). Edge
data is an (r, n) array holding z at the r Gauss nodes of an edge, ordered
by increasing x~ (bottom, top) or t~ (left, right). Batched functions take a
leading batch axis.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Literal, NamedTuple, Optional, Sequence

import numpy as np
from scipy.linalg import block_diag

from .errors import InvalidArgumentError, SolverDivergenceError
from .newton import finite_difference_jacobian, max_abs, newton_solve
from .tableau import RKTableau

logger = logging.getLogger(__name__)

SKEW_TOL = 1e-14

EdgeData = np.ndarray


# ---------------------------------------------------------------------------
# Problem and mesh description
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PDESystem:
    """K z_t + L z_x = grad S(z) with constant skew-symmetric K and L.

    grad_S maps (..., n) -> (..., n) and hess_S maps (..., n) -> (..., n, n).
    exact, when given, maps (x, t) arrays to (..., n).
    """

    K: np.ndarray
    L: np.ndarray
    grad_S: Callable[[np.ndarray], np.ndarray]
    hess_S: Callable[[np.ndarray], np.ndarray]
    exact: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    name: str = "custom"

    def __post_init__(self):
        K = np.array(self.K, dtype=float)
        L = np.array(self.L, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape != L.shape:
            raise InvalidArgumentError(f"K and L must be square and equal-sized, got {K.shape} and {L.shape}")
        for label, M in (("K", K), ("L", L)):
            if np.max(np.abs(M + M.T), initial=0.0) > SKEW_TOL:
                raise InvalidArgumentError(f"{label} is not skew-symmetric")
            M.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "L", L)

    @property
    def n(self) -> int:
        return self.K.shape[0]


def hessian_defect(pde: PDESystem, points: np.ndarray, h: float = 1e-6) -> float:
    """Largest relative gap between hess_S and central differences of grad_S."""
    points = np.atleast_2d(points)
    worst = 0.0
    for z in points:
        H = pde.hess_S(z)
        fd = np.empty_like(H)
        for k in range(pde.n):
            e = np.zeros(pde.n)
            e[k] = h
            fd[:, k] = (pde.grad_S(z + e) - pde.grad_S(z - e)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(H - fd)) / (1.0 + np.max(np.abs(H)))))
    return worst


@dataclass(frozen=True)
class MeshConfig:
    a: float
    b: float
    N: int
    dt: float
    t_final: float

    def __post_init__(self):
        if not self.b > self.a:
            raise InvalidArgumentError(f"empty interval [{self.a}, {self.b}]")
        if int(self.N) != self.N or self.N < 1:
            raise InvalidArgumentError(f"N must be a positive integer, got {self.N}")
        if not self.dt > 0:
            raise InvalidArgumentError(f"dt must be positive, got {self.dt}")
        if self.t_final < 0:
            raise InvalidArgumentError(f"t_final must be non-negative, got {self.t_final}")

    @classmethod
    def from_courant(cls, a: float, b: float, N: int, courant: float, t_final: float) -> "MeshConfig":
        if not courant > 0:
            raise InvalidArgumentError(f"Courant number must be positive, got {courant}")
        return cls(a=a, b=b, N=N, dt=courant * (b - a) / N, t_final=t_final)

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.N

    @property
    def courant(self) -> float:
        return self.dt / self.dx

    @property
    def half_steps(self) -> int:
        return int(round(2.0 * self.t_final / self.dt))


@dataclass(frozen=True, eq=False)
class TransformedCoeffs:
    K_tilde: np.ndarray
    L_tilde: np.ndarray


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-12
    max_iter: int = 50
    jacobian_mode: Literal["analytic", "finite-difference"] = "analytic"
    max_halvings: int = 8
    fd_fallback: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidArgumentError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1:
            raise InvalidArgumentError(f"max_iter must be at least 1, got {self.max_iter}")
        if self.jacobian_mode not in ("analytic", "finite-difference"):
            raise InvalidArgumentError(f"unknown jacobian mode {self.jacobian_mode!r}")


@dataclass(eq=False)
class StageBlock:
    """Internal stages of one diamond, or a batch of them: (..., r, r, n)."""

    Z: np.ndarray
    X: np.ndarray
    T: np.ndarray

    def __getitem__(self, item) -> "StageBlock":
        return StageBlock(self.Z[item], self.X[item], self.T[item])


def transform_coeffs(pde: PDESystem, dx: float, dt: float) -> TransformedCoeffs:
    """Coefficients of the stage equations on the unit square."""
    if not (dx > 0 and dt > 0):
        raise InvalidArgumentError(f"dx and dt must be positive, got dx={dx}, dt={dt}")
    return TransformedCoeffs(K_tilde=pde.K / dt - pde.L / dx, L_tilde=pde.K / dt + pde.L / dx)


def diamond_coordinates(x_bottom, t_bottom, dx, dt, xt, tt):
    """Physical (x, t) of square point (x~, t~) in the diamond with the given bottom vertex."""
    xt = np.asarray(xt, dtype=float)
    tt = np.asarray(tt, dtype=float)
    return x_bottom + 0.5 * dx * (xt - tt), t_bottom + 0.5 * dt * (xt + tt)


# ---------------------------------------------------------------------------
# Linear bookkeeping of the stage grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StageConstraint:
    """A linear condition on one stage component.

    quantity: "Z" (stage value), "z_x" or "z_t" (physical derivatives
    (X - T)/dx and (X + T)/dt of the transformed diamond).
    """

    i: int
    j: int
    quantity: Literal["Z", "z_x", "z_t"]
    component: int


def _blocks(M: np.ndarray, r: int, n: int) -> np.ndarray:
    if M.ndim == 2:
        return np.kron(np.eye(r * r), M)
    return block_diag(*M.reshape(r * r, n, n))


class StageSystem:
    """Maps between the full unknown vector w = [Z, z_left, z_bottom] and X, T.

    With flat stage index (i*r + j)*n + c:
        X = A^-1 (Z - z_left)   along each row j
        T = A^-1 (Z - z_bottom) along each column i
    and the stage equation K~ T + L~ X - grad S(Z) = 0 is linear in w apart
    from grad S. K_tilde and L_tilde are (n, n) or per stage (r, r, n, n).
    """

    def __init__(self, tab: RKTableau, K_tilde: np.ndarray, L_tilde: np.ndarray):
        K_tilde = np.asarray(K_tilde, dtype=float)
        L_tilde = np.asarray(L_tilde, dtype=float)
        r, n = tab.r, K_tilde.shape[-1]
        self.tab, self.r, self.n = tab, r, n
        self.nz, self.ne = r * r * n, r * n
        self.width = self.nz + 2 * self.ne

        Ainv = tab.A_inv
        s = Ainv.sum(axis=1)[:, None]
        I_r, I_n = np.eye(r), np.eye(n)
        zero = np.zeros((self.nz, self.ne))
        self.X_map = np.hstack([np.kron(np.kron(Ainv, I_r), I_n), -np.kron(np.kron(s, I_r), I_n), zero])
        self.T_map = np.hstack([np.kron(np.kron(I_r, Ainv), I_n), zero, -np.kron(np.kron(I_r, s), I_n)])

        self.linear = _blocks(K_tilde, r, n) @ self.T_map + _blocks(L_tilde, r, n) @ self.X_map
        self.K_tilde, self.L_tilde = K_tilde, L_tilde

    def pack(self, Z, z_left, z_bottom) -> np.ndarray:
        B = Z.shape[0]
        return np.hstack([Z.reshape(B, -1), z_left.reshape(B, -1), z_bottom.reshape(B, -1)])

    def unpack(self, w: np.ndarray):
        B, r, n = w.shape[0], self.r, self.n
        Z = w[:, :self.nz].reshape(B, r, r, n)
        z_left = w[:, self.nz:self.nz + self.ne].reshape(B, r, n)
        z_bottom = w[:, self.nz + self.ne:].reshape(B, r, n)
        return Z, z_left, z_bottom

    def stages(self, w: np.ndarray) -> StageBlock:
        shape = (w.shape[0], self.r, self.r, self.n)
        Z, _, _ = self.unpack(w)
        return StageBlock(Z=Z.copy(), X=(w @ self.X_map.T).reshape(shape), T=(w @ self.T_map.T).reshape(shape))

    def updates(self, z_left, z_bottom, stages: StageBlock):
        b = self.tab.b
        z_right = z_left + np.einsum("k,...kjc->...jc", b, stages.X)
        z_top = z_bottom + np.einsum("k,...ikc->...ic", b, stages.T)
        return z_right, z_top

    def constraint_row(self, con: StageConstraint, dx: Optional[float], dt: Optional[float]) -> np.ndarray:
        k = (con.i * self.r + con.j) * self.n + con.component
        if con.quantity == "Z":
            row = np.zeros(self.width)
            row[k] = 1.0
            return row
        if dx is None or dt is None:
            raise InvalidArgumentError("derivative constraints need the diamond dx and dt")
        if con.quantity == "z_x":
            return (self.X_map[k] - self.T_map[k]) / dx
        if con.quantity == "z_t":
            return (self.X_map[k] + self.T_map[k]) / dt
        raise InvalidArgumentError(f"unknown constraint quantity {con.quantity!r}")


# ---------------------------------------------------------------------------
# Batched solve
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class DiamondSolution:
    """Result of a batched stage solve; every array has a leading batch axis."""

    z_left: np.ndarray
    z_bottom: np.ndarray
    z_right: np.ndarray
    z_top: np.ndarray
    stages: StageBlock
    iterations: np.ndarray
    residual: np.ndarray
    tolerance: np.ndarray


class _StageBatch:
    """Residual and Jacobian of the reduced system for a batch of diamonds."""

    def __init__(self, solver: "StageSolver", fixed: np.ndarray, values: np.ndarray):
        self.solver = solver
        lin, rows = solver.system.linear, solver.rows
        self.fixed = fixed
        self.offset = np.hstack([fixed @ lin.T, fixed @ rows.T - values])
        self.values = values
        self.scale = np.ones(fixed.shape[0])

    def full(self, y: np.ndarray, idx: np.ndarray) -> np.ndarray:
        w = self.fixed[idx].copy()
        w[:, self.solver.free] = y
        return w

    def _gradient(self, y: np.ndarray) -> np.ndarray:
        sys_ = self.solver.system
        Z = y[:, :sys_.nz].reshape(y.shape[0], sys_.r * sys_.r, sys_.n)
        return self.solver.pde.grad_S(Z).reshape(y.shape[0], sys_.nz)

    def set_scale(self, y: np.ndarray):
        # size of the terms balanced in each equation at the initial guess
        solver = self.solver
        w = np.abs(self.full(y, np.arange(y.shape[0])))
        stage = w @ solver.abs_linear.T + np.abs(self._gradient(y))
        extra = w @ solver.abs_rows.T + np.abs(self.values)
        self.scale = 1.0 + max_abs(np.hstack([stage, extra]))

    def residual(self, y: np.ndarray, idx: np.ndarray) -> np.ndarray:
        R = y @ self.solver.J0.T + self.offset[idx]
        R[:, :self.solver.system.nz] -= self._gradient(y)
        return R

    def jacobian(self, y: np.ndarray, idx: np.ndarray) -> np.ndarray:
        sys_ = self.solver.system
        n, stages = sys_.n, sys_.r * sys_.r
        Z = y[:, :sys_.nz].reshape(y.shape[0], stages, n)
        H = self.solver.pde.hess_S(Z)
        J = np.repeat(self.solver.J0[None], y.shape[0], axis=0)
        for s in range(stages):
            J[:, s * n:(s + 1) * n, s * n:(s + 1) * n] -= H[:, s]
        return J


class StageSolver:
    """Newton solver for the stage equations of a batch of diamonds.

    The unknowns are the stage values Z plus any freed edges; each freed edge
    must be balanced by the same number of linear constraints.
    """

    def __init__(self, pde: PDESystem, tab: RKTableau, K_tilde: np.ndarray, L_tilde: np.ndarray,
                 cfg: SolverConfig, free_left: bool = False, free_bottom: bool = False,
                 constraints: Sequence[StageConstraint] = (), dx: Optional[float] = None,
                 dt: Optional[float] = None):
        if np.shape(K_tilde)[-1] != pde.n:
            raise InvalidArgumentError(f"coefficients are {np.shape(K_tilde)}, PDE dimension is {pde.n}")
        self.pde, self.tab, self.cfg = pde, tab, cfg
        self.system = system = StageSystem(tab, K_tilde, L_tilde)
        self.free_left, self.free_bottom = free_left, free_bottom
        self.constraints = tuple(constraints)

        free = [np.arange(system.nz)]
        if free_left:
            free.append(system.nz + np.arange(system.ne))
        if free_bottom:
            free.append(system.nz + system.ne + np.arange(system.ne))
        self.free = np.concatenate(free)
        if len(self.free) != system.nz + len(self.constraints):
            raise InvalidArgumentError(
                f"{len(self.free) - system.nz} freed edge values need as many constraints, "
                f"got {len(self.constraints)}"
            )
        self.rows = np.array([system.constraint_row(con, dx, dt) for con in self.constraints]
                             ).reshape(len(self.constraints), system.width)
        self.J0 = np.vstack([system.linear[:, self.free], self.rows[:, self.free]])
        self.abs_linear = np.abs(system.linear)
        self.abs_rows = np.abs(self.rows)

    @classmethod
    def interior(cls, pde: PDESystem, tab: RKTableau, coeffs: TransformedCoeffs, cfg: SolverConfig):
        return cls(pde, tab, coeffs.K_tilde, coeffs.L_tilde, cfg)

    @property
    def unknowns(self) -> int:
        return len(self.free)

    def _batch(self, z_left, z_bottom, values, guess_left=None, guess_bottom=None):
        system = self.system
        known = z_left if z_left is not None else z_bottom
        if known is None:
            B = np.shape(values)[0] if values is not None else np.shape(guess_left)[0]
        else:
            B = np.shape(known)[0]
        shape = (B, system.r, system.n)
        if values is None:
            values = np.zeros((B, len(self.constraints)))
        values = np.asarray(values, dtype=float).reshape(B, len(self.constraints))

        left = self._edge(z_left, self.free_left, shape, "z_left")
        bottom = self._edge(z_bottom, self.free_bottom, shape, "z_bottom")
        fixed = system.pack(np.zeros((B, system.r, system.r, system.n)), left, bottom)

        # initial guess: Z[i, j] = (z_left[j] + z_bottom[i]) / 2
        g_left = left if not self.free_left else np.asarray(guess_left if guess_left is not None else bottom)
        g_bottom = bottom if not self.free_bottom else np.asarray(guess_bottom if guess_bottom is not None else g_left)
        Z0 = 0.5 * (g_left[:, None, :, :] + g_bottom[:, :, None, :])
        y0 = [Z0.reshape(B, -1)]
        if self.free_left:
            y0.append(g_left.reshape(B, -1))
        if self.free_bottom:
            y0.append(g_bottom.reshape(B, -1))
        return _StageBatch(self, fixed, values), np.hstack(y0)

    def _edge(self, edge, free, shape, label):
        if free:
            return np.zeros(shape)
        if edge is None:
            raise InvalidArgumentError(f"{label} is required")
        edge = np.asarray(edge, dtype=float)
        if edge.shape != shape:
            raise InvalidArgumentError(f"{label} has shape {edge.shape}, expected {shape}")
        if not np.all(np.isfinite(edge)):
            raise InvalidArgumentError(f"{label} contains non-finite values")
        return edge

    def solve(self, z_left: Optional[np.ndarray], z_bottom: Optional[np.ndarray],
              values: Optional[np.ndarray] = None, guess_left=None, guess_bottom=None,
              guess_Z: Optional[np.ndarray] = None) -> DiamondSolution:
        """Solve a batch; z_left/z_bottom are (B, r, n), None where freed."""
        cfg = self.cfg
        batch, y0 = self._batch(z_left, z_bottom, values, guess_left, guess_bottom)
        if guess_Z is not None:
            y0[:, :self.system.nz] = np.asarray(guess_Z, dtype=float).reshape(y0.shape[0], -1)
        batch.set_scale(y0)

        result = newton_solve(batch, y0, cfg.tol, cfg.max_iter, cfg.max_halvings, cfg.jacobian_mode)
        y, iterations, residual = result.y, result.iterations, result.residual
        failed = np.flatnonzero(~result.converged)

        if failed.size and cfg.fd_fallback:
            logger.warning("Newton failed on %d diamond(s); retrying with a finite-difference Jacobian",
                           failed.size)
            retry = newton_solve(batch, y0, cfg.tol, cfg.max_iter, cfg.max_halvings,
                                 "finite-difference", items=failed)
            y[failed] = retry.y
            iterations[failed] += retry.iterations
            residual[failed] = retry.residual
            failed = failed[~retry.converged]

        if failed.size:
            k = int(failed[0])
            raise SolverDivergenceError(
                f"stage equations did not converge for batch item {k}: "
                f"residual {residual[k]:.3e} > {result.threshold[k]:.3e}",
                residual=float(residual[k]), diamond=k,
            )

        w = batch.full(y, np.arange(y.shape[0]))
        stages = self.system.stages(w)
        _, left, bottom = self.system.unpack(w)
        right, top = self.system.updates(left, bottom, stages)
        return DiamondSolution(z_left=left, z_bottom=bottom, z_right=right, z_top=top, stages=stages,
                               iterations=iterations, residual=residual, tolerance=result.threshold)

    def residual_and_jacobian(self, y: np.ndarray, z_left, z_bottom, values=None, mode: str = "analytic"):
        """Reduced residual and its Jacobian at unknowns y (B, unknowns)."""
        batch, _ = self._batch(z_left, z_bottom, values, guess_left=z_bottom, guess_bottom=z_left)
        idx = np.arange(y.shape[0])
        if mode == "analytic":
            J = batch.jacobian(y, idx)
        else:
            J = finite_difference_jacobian(batch.residual, y, idx)
        return batch.residual(y, idx), J

    def linearized(self, stages: StageBlock, dz_left: np.ndarray, dz_bottom: np.ndarray) -> DiamondSolution:
        """Solve the variational stage equations with S'' frozen at `stages`."""
        if self.free_left or self.free_bottom or self.constraints:
            raise InvalidArgumentError("linearized solves are defined for interior diamonds only")
        batch, _ = self._batch(dz_left, dz_bottom, None)
        y = stages.Z.reshape(stages.Z.shape[0], -1)
        idx = np.arange(y.shape[0])
        J = batch.jacobian(y, idx)
        dz = -np.linalg.solve(J, batch.offset[..., None])[..., 0]
        w = batch.full(dz, idx)
        dstages = self.system.stages(w)
        _, left, bottom = self.system.unpack(w)
        right, top = self.system.updates(left, bottom, dstages)
        zeros = np.zeros(len(idx))
        return DiamondSolution(z_left=left, z_bottom=bottom, z_right=right, z_top=top, stages=dstages,
                               iterations=np.zeros(len(idx), dtype=int), residual=zeros, tolerance=zeros)


def solve_diamonds(z_left: np.ndarray, z_bottom: np.ndarray, pde: PDESystem, tab: RKTableau,
                   coeffs: TransformedCoeffs, cfg: SolverConfig) -> DiamondSolution:
    """Solve a batch of interior diamonds from (B, r, n) lower edges."""
    return StageSolver.interior(pde, tab, coeffs, cfg).solve(z_left, z_bottom)


def solve_diamond(z_left: EdgeData, z_bottom: EdgeData, pde: PDESystem, tab: RKTableau,
                  coeffs: TransformedCoeffs, cfg: SolverConfig):
    """Solve one diamond; returns (z_right, z_top, stages)."""
    z_left = np.asarray(z_left, dtype=float)
    z_bottom = np.asarray(z_bottom, dtype=float)
    for label, edge in (("z_left", z_left), ("z_bottom", z_bottom)):
        if edge.shape != (tab.r, pde.n):
            raise InvalidArgumentError(f"{label} has shape {edge.shape}, expected {(tab.r, pde.n)}")
    sol = solve_diamonds(z_left[None], z_bottom[None], pde, tab, coeffs, cfg)
    return sol.z_right[0], sol.z_top[0], sol.stages[0]


def stage_residuals(stages: StageBlock, z_left: EdgeData, z_bottom: EdgeData, pde: PDESystem,
                    tab: RKTableau, coeffs: TransformedCoeffs) -> dict:
    """Max-norm residuals of the row, column and gradient stage equations."""
    A = tab.A
    Z, X, T = stages.Z, stages.X, stages.T
    rows = Z - z_left[None, :, :] - np.einsum("ik,kjc->ijc", A, X)
    cols = Z - z_bottom[:, None, :] - np.einsum("jk,ikc->ijc", A, T)
    grad = pde.grad_S(Z) - (T @ coeffs.K_tilde.T + X @ coeffs.L_tilde.T)
    return {"row": float(np.max(np.abs(rows))), "column": float(np.max(np.abs(cols))),
            "gradient": float(np.max(np.abs(grad)))}


# ---------------------------------------------------------------------------
# Corner reconstruction (diagnostic only)
# ---------------------------------------------------------------------------

class Corners(NamedTuple):
    bottom: np.ndarray
    right: np.ndarray
    top: np.ndarray
    left: np.ndarray


def _lagrange_at(c: np.ndarray, s: float) -> np.ndarray:
    ell = np.ones(len(c))
    for j in range(len(c)):
        for m in range(len(c)):
            if m != j:
                ell[j] *= (s - c[m]) / (c[j] - c[m])
    return ell


def _edge_ends(values: np.ndarray, slopes: np.ndarray, tab: RKTableau):
    """Values at both ends of an edge from its nodes and tangential slopes."""
    bA = tab.b @ tab.A
    mean = tab.b @ values
    return mean - bA @ slopes, mean + (tab.b - bA) @ slopes


def corner_values(stages: StageBlock, edges: Sequence[EdgeData], tab: RKTableau) -> Corners:
    """Corner values from RK updates along each edge, averaged per corner.

    edges is (z_left, z_bottom, z_right, z_top).
    """
    z_left, z_bottom, z_right, z_top = (np.asarray(e, dtype=float) for e in edges)
    at0, at1 = _lagrange_at(tab.c, 0.0), _lagrange_at(tab.c, 1.0)
    X, T = stages.X, stages.T

    bottom_from_b, right_from_b = _edge_ends(z_bottom, np.einsum("j,kjc->kc", at0, X), tab)
    left_from_t, top_from_t = _edge_ends(z_top, np.einsum("j,kjc->kc", at1, X), tab)
    bottom_from_l, left_from_l = _edge_ends(z_left, np.einsum("i,ikc->kc", at0, T), tab)
    right_from_r, top_from_r = _edge_ends(z_right, np.einsum("i,ikc->kc", at1, T), tab)

    return Corners(
        bottom=0.5 * (bottom_from_b + bottom_from_l),
        right=0.5 * (right_from_b + right_from_r),
        top=0.5 * (top_from_t + top_from_r),
        left=0.5 * (left_from_t + left_from_l),
    )
