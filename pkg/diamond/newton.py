"""
Batched damped Newton iteration.

Every item of the batch carries its own convergence mask, line-search factor
and iteration count, so the arithmetic applied to one item never depends on
which other items share the batch.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Protocol

import numpy as np

from .errors import SingularSystemError

logger = logging.getLogger(__name__)

Residual = Callable[[np.ndarray, np.ndarray], np.ndarray]


class BatchedSystem(Protocol):
    scale: np.ndarray

    def residual(self, y: np.ndarray, idx: np.ndarray) -> np.ndarray: ...

    def jacobian(self, y: np.ndarray, idx: np.ndarray) -> np.ndarray: ...


@dataclass
class NewtonResult:
    y: np.ndarray
    converged: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray
    threshold: np.ndarray


def max_abs(R: np.ndarray) -> np.ndarray:
    if R.shape[-1] == 0:
        return np.zeros(R.shape[:-1])
    return np.max(np.abs(R), axis=-1)


def finite_difference_jacobian(residual: Residual, y: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Central-difference Jacobian of a batched residual, one column at a time."""
    h = np.cbrt(np.finfo(float).eps) * np.maximum(1.0, np.abs(y))
    columns = []
    for k in range(y.shape[1]):
        plus, minus = y.copy(), y.copy()
        plus[:, k] += h[:, k]
        minus[:, k] -= h[:, k]
        diff = residual(plus, idx) - residual(minus, idx)
        columns.append(diff / (2.0 * h[:, k, None]))
    return np.stack(columns, axis=-1)


def _newton_step(J: np.ndarray, R: np.ndarray, idx: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(J, R[..., None])[..., 0]
    except np.linalg.LinAlgError:
        for k in range(len(idx)):
            try:
                np.linalg.solve(J[k], R[k])
            except np.linalg.LinAlgError as exc:
                raise SingularSystemError(
                    f"singular stage Jacobian for batch item {idx[k]}", diamond=int(idx[k])
                ) from exc
        raise


def _line_search(residual: Residual, y0, step, idx, norm0, max_halvings):
    # backtracking: halve until the max-norm residual decreases; the last
    # trial is accepted when no halving helps
    lam = np.ones(len(idx))
    y = y0 - step
    R = residual(y, idx)
    norm = max_abs(R)
    for _ in range(max_halvings):
        worse = np.flatnonzero(~(norm < norm0))
        if worse.size == 0:
            break
        lam[worse] *= 0.5
        y[worse] = y0[worse] - lam[worse, None] * step[worse]
        R[worse] = residual(y[worse], idx[worse])
        norm[worse] = max_abs(R[worse])
    return y, R, norm


def newton_solve(system: BatchedSystem, y0: np.ndarray, tol: float, max_iter: int,
                 max_halvings: int = 8, jacobian_mode: str = "analytic",
                 items: Optional[np.ndarray] = None) -> NewtonResult:
    """Solve system.residual(y) = 0 for the batch rows listed in `items`."""
    if items is None:
        items = np.arange(y0.shape[0])
    y = np.array(y0[items], dtype=float)
    R = system.residual(y, items)
    norm = max_abs(R)
    threshold = tol * system.scale[items]
    iterations = np.zeros(len(items), dtype=int)
    active = ~(norm <= threshold)

    for _ in range(max_iter):
        local = np.flatnonzero(active)
        if local.size == 0:
            break
        idx = items[local]
        yi = y[local]
        if jacobian_mode == "analytic":
            J = system.jacobian(yi, idx)
        else:
            J = finite_difference_jacobian(system.residual, yi, idx)
        step = _newton_step(J, R[local], idx)
        y_new, R_new, n_new = _line_search(system.residual, yi, step, idx, norm[local], max_halvings)
        y[local], R[local], norm[local] = y_new, R_new, n_new
        iterations[local] += 1
        active[local] = ~(n_new <= threshold[local])

    return NewtonResult(y=y, converged=norm <= threshold, iterations=iterations,
                        residual=norm, threshold=threshold)
