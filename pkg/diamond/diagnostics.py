"""
Error norms, convergence-order fits and the per-diamond discrete
multisymplectic conservation residual.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from .core import DiamondSolution, MeshConfig, PDESystem, StageSolver
from .errors import InvalidArgumentError, UnsupportedOperationError
from .initialization import ZigZagState, zigzag_nodes
from .problems import WaveProblem
from .tableau import RKTableau, gauss_tableau

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def error_norm(state: ZigZagState, p: WaveProblem, mesh: MeshConfig) -> float:
    """Discrete 2-norm of the u error over every zig-zag node."""
    if getattr(p, "exact_u", None) is None:
        raise UnsupportedOperationError(f"problem {p.name!r} has no exact solution")
    x, t = zigzag_nodes(mesh, gauss_tableau(state.r), state.parity, state.row_time)
    diff = state.edges[..., 0] - p.exact_u(x, t)
    return float(np.sqrt((mesh.b - mesh.a) / diff.size * np.sum(diff ** 2)))


# ---------------------------------------------------------------------------
# Convergence tables
# ---------------------------------------------------------------------------

@dataclass
class ErrorTable:
    problem: str
    init: str
    bc: str
    r: int
    rows: pd.DataFrame = field(default_factory=lambda: pd.DataFrame(columns=["N", "dx", "dt", "error"]))

    def __post_init__(self):
        self.rows = self.rows.sort_values("N").reset_index(drop=True)
        if not np.all(np.isfinite(self.rows["error"].to_numpy(dtype=float))):
            raise InvalidArgumentError("error table contains non-finite errors")

    def add(self, N: int, dx: float, dt: float, error: float) -> None:
        row = pd.DataFrame([{"N": int(N), "dx": dx, "dt": dt, "error": error}])
        self.rows = pd.concat([self.rows, row], ignore_index=True) if len(self.rows) else row
        self.__post_init__()

    def frame(self) -> pd.DataFrame:
        out = self.rows.copy()
        out["pairwise_order"] = pairwise_orders(out["dt"].to_numpy(float), out["error"].to_numpy(float))
        return out

    def to_csv(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.frame()[["N", "dx", "dt", "error", "pairwise_order"]].to_csv(
            path, index=False, float_format=FLOAT_FORMAT)
        logger.info("Saved: %s", path)
        return path


def pairwise_orders(dt: np.ndarray, error: np.ndarray) -> np.ndarray:
    """Slope between each row and the previous one; NaN for the first row."""
    orders = np.full(len(dt), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        orders[1:] = np.log(error[1:] / error[:-1]) / np.log(dt[1:] / dt[:-1])
    return orders


@dataclass
class OrderFit:
    order: float
    intercept: float
    pairwise: np.ndarray
    rows_used: int


def fit_order(table: ErrorTable) -> OrderFit:
    """Least-squares slope of log E against log dt."""
    dt = table.rows["dt"].to_numpy(dtype=float)
    error = table.rows["error"].to_numpy(dtype=float)
    usable = error > 0
    if not usable.all():
        logger.warning("excluding %d row(s) with zero error from the order fit", int((~usable).sum()))
    if usable.sum() < 2:
        raise InvalidArgumentError("need at least two rows with positive error to fit an order")
    fit = stats.linregress(np.log(dt[usable]), np.log(error[usable]))
    return OrderFit(order=float(fit.slope), intercept=float(fit.intercept),
                    pairwise=pairwise_orders(dt[usable], error[usable]), rows_used=int(usable.sum()))


# ---------------------------------------------------------------------------
# Discrete conservation law
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Variation:
    """Edge values of one variation field on a single diamond, each (r, n)."""

    z_left: np.ndarray
    z_bottom: np.ndarray
    z_right: np.ndarray
    z_top: np.ndarray

    @classmethod
    def from_solution(cls, sol: DiamondSolution, k: int = 0) -> "Variation":
        return cls(sol.z_left[k], sol.z_bottom[k], sol.z_right[k], sol.z_top[k])

    def __sub__(self, other: "Variation") -> "Variation":
        return Variation(self.z_left - other.z_left, self.z_bottom - other.z_bottom,
                         self.z_right - other.z_right, self.z_top - other.z_top)

    def __mul__(self, alpha: float) -> "Variation":
        return Variation(alpha * self.z_left, alpha * self.z_bottom, alpha * self.z_right, alpha * self.z_top)

    __rmul__ = __mul__


@dataclass
class ConservationSample:
    residual: float
    dx: float
    dt: float
    weights: np.ndarray


def _form(M: np.ndarray, e1: np.ndarray, e2: np.ndarray) -> np.ndarray:
    return np.einsum("ic,cd,id->i", e1, M, e2)


def conservation_sample(v1: Variation, v2: Variation, pde: PDESystem, tab: RKTableau,
                        mesh: MeshConfig) -> ConservationSample:
    b, K, L = tab.b, pde.K, pde.L
    for a_, b_ in zip((v1.z_left, v1.z_bottom, v1.z_right, v1.z_top),
                      (v2.z_left, v2.z_bottom, v2.z_right, v2.z_top)):
        if a_.shape != (tab.r, pde.n) or b_.shape != (tab.r, pde.n):
            raise InvalidArgumentError(f"variation edges must be {(tab.r, pde.n)}")
    omega = _form(K, v1.z_top, v2.z_top) + _form(K, v1.z_right, v2.z_right) \
        - _form(K, v1.z_left, v2.z_left) - _form(K, v1.z_bottom, v2.z_bottom)
    kappa = _form(L, v1.z_right, v2.z_right) + _form(L, v1.z_bottom, v2.z_bottom) \
        - _form(L, v1.z_top, v2.z_top) - _form(L, v1.z_left, v2.z_left)
    value = b @ omega / mesh.dt + b @ kappa / mesh.dx
    return ConservationSample(residual=float(abs(value)), dx=mesh.dx, dt=mesh.dt, weights=tab.b)


def conservation_residual(v1: Variation, v2: Variation, pde: PDESystem, tab: RKTableau,
                          mesh: MeshConfig) -> float:
    """|discrete symplectic conservation law| on one diamond for two variations."""
    return conservation_sample(v1, v2, pde, tab, mesh).residual


def random_edge(rng: np.random.Generator, tab: RKTableau, n: int, scale: float = 1.0) -> np.ndarray:
    return scale * rng.standard_normal((tab.r, n))


def variation_pair(solver: StageSolver, z_left: np.ndarray, z_bottom: np.ndarray,
                   rng: np.random.Generator, stages=None):
    """Two independent variations of the diamond solution through (z_left, z_bottom)."""
    tab, n = solver.tab, solver.pde.n
    if stages is None:
        stages = solver.solve(z_left[None], z_bottom[None]).stages
    out = []
    for _ in range(2):
        dz_left, dz_bottom = random_edge(rng, tab, n), random_edge(rng, tab, n)
        sol = solver.linearized(stages, dz_left[None], dz_bottom[None])
        out.append(Variation.from_solution(sol))
    return out[0], out[1]


def random_variation(rng: np.random.Generator, tab: RKTableau, n: int) -> Variation:
    """Four unrelated edges: not produced by the scheme."""
    return Variation(*(random_edge(rng, tab, n) for _ in range(4)))


def conservation_table(samples: Sequence[dict], path: Optional[Path] = None) -> pd.DataFrame:
    df = pd.DataFrame(list(samples))
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info("Saved: %s", path)
    return df
