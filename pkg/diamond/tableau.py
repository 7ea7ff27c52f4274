"""
Gauss-Legendre Runge-Kutta tableaux for any number of stages.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

from .errors import InvalidArgumentError


@dataclass(frozen=True, eq=False)
class RKTableau:
    """Butcher coefficients of the r-stage Gauss collocation method."""

    r: int
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    A_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        inv = np.linalg.inv(self.A)
        inv.setflags(write=False)
        object.__setattr__(self, "A_inv", inv)

    @property
    def order(self) -> int:
        return 2 * self.r

    def defects(self) -> dict:
        """Max violation of each tableau invariant."""
        A, b, c, r = self.A, self.b, self.c, self.r
        q = np.arange(1, r + 1)
        collocation = A @ c[:, None] ** (q - 1) - c[:, None] ** q / q
        bA = b[:, None] * A
        symplectic = bA + bA.T - np.outer(b, b)
        return {
            "weights": abs(b.sum() - 1.0),
            "symmetry": float(np.max(np.abs(c + c[::-1] - 1.0))),
            "symplectic": float(np.max(np.abs(symplectic))),
            "collocation": float(np.max(np.abs(collocation))),
        }


def _legendre_roots(r: int) -> np.ndarray:
    # Newton on P_r from Chebyshev-like guesses; roots come out descending
    P = legendre.Legendre.basis(r)
    dP = P.deriv()
    k = np.arange(1, r + 1)
    x = np.cos(np.pi * (k - 0.25) / (r + 0.5))
    for _ in range(100):
        step = P(x) / dP(x)
        x = x - step
        if np.max(np.abs(step)) < 1e-16:
            break
    return x


@lru_cache(maxsize=None, typed=True)
def gauss_tableau(r: int) -> RKTableau:
    """Return the r-stage Gauss-Legendre tableau on [0, 1]."""
    if isinstance(r, bool) or not isinstance(r, (int, np.integer)) or r < 1:
        raise InvalidArgumentError(f"stage count must be a positive integer, got {r!r}")
    r = int(r)

    x = _legendre_roots(r)
    dP = legendre.Legendre.basis(r).deriv()(x)
    weights = 1.0 / ((1.0 - x ** 2) * dP ** 2)

    order = np.argsort(x)[::-1]
    c = (1.0 - x[order]) / 2.0
    b = weights[order]
    c = 0.5 * (c + (1.0 - c[::-1]))
    b = 0.5 * (b + b[::-1])
    b = b / b.sum()

    # Collocation conditions sum_k a_ik p(c_k) = int_0^c_i p for p in the
    # shifted Legendre basis of degree < r.
    y = 2.0 * c - 1.0
    V = legendre.legvander(y, r - 1)
    C = np.column_stack([
        0.5 * legendre.Legendre.basis(q).integ(lbnd=-1.0)(y) for q in range(r)
    ])
    A = np.linalg.solve(V.T, C.T).T

    for arr in (A, b, c):
        arr.setflags(write=False)
    return RKTableau(r=r, A=A, b=b, c=c)
