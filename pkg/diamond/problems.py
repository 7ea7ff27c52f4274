"""
Wave equations u_tt - u_xx = f(u) in first-order multi-Hamiltonian form, and
the named sample problems with closed-form exact solutions.

Each sample problem is written once as a sympy potential V(u) and solution
u(x, t); every derivative needed for errors, boundary data and
initialization is derived symbolically and compiled with lambdify.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np
import sympy as sp

from .core import PDESystem
from .errors import InvalidArgumentError

x_sym, t_sym, u_sym = sp.symbols("x t u", real=True)

WAVE_K = np.array([[0.0, -1.0, 0.0],
                   [1.0, 0.0, 0.0],
                   [0.0, 0.0, 0.0]])
WAVE_L = np.array([[0.0, 0.0, 1.0],
                   [0.0, 0.0, 0.0],
                   [-1.0, 0.0, 0.0]])


def _compile(expr: sp.Expr, *symbols: sp.Symbol) -> Callable:
    fn = sp.lambdify(symbols, expr, modules="numpy")

    def evaluate(*values):
        values = [np.asarray(v, dtype=float) for v in values]
        shape = np.broadcast(*values).shape
        return np.zeros(shape) + np.asarray(fn(*values), dtype=float)

    return evaluate


@dataclass(frozen=True, eq=False)
class WaveProblem:
    """u_tt - u_xx = f(u) = V'(u) on [a, b] with an exact solution."""

    name: str
    V: Callable
    f: Callable
    fprime: Callable
    domain: Tuple[float, float]
    bc: str
    exact_u: Callable
    u_t: Callable
    u_x: Callable
    u_tt: Callable
    u_tx: Callable
    u_xx: Callable
    expressions: Dict[str, sp.Expr] = field(default_factory=dict, repr=False)

    @property
    def a(self) -> float:
        return self.domain[0]

    @property
    def b(self) -> float:
        return self.domain[1]

    def state(self, x, t) -> np.ndarray:
        """Exact z = (u, u_t, u_x) stacked on the last axis."""
        return np.stack([self.exact_u(x, t), self.u_t(x, t), self.u_x(x, t)], axis=-1)


def make_wave_problem(name: str, potential: sp.Expr, solution: sp.Expr,
                      domain: Tuple[float, float], bc: str = "periodic") -> WaveProblem:
    f = sp.diff(potential, u_sym)
    u_t = sp.diff(solution, t_sym)
    u_x = sp.diff(solution, x_sym)
    exprs = {
        "V": potential, "f": f, "fprime": sp.diff(f, u_sym),
        "u": solution, "u_t": u_t, "u_x": u_x,
        "u_tt": sp.diff(u_t, t_sym), "u_tx": sp.diff(u_t, x_sym), "u_xx": sp.diff(u_x, x_sym),
    }
    return WaveProblem(
        name=name,
        V=_compile(exprs["V"], u_sym),
        f=_compile(exprs["f"], u_sym),
        fprime=_compile(exprs["fprime"], u_sym),
        domain=(float(domain[0]), float(domain[1])),
        bc=bc,
        exact_u=_compile(solution, x_sym, t_sym),
        u_t=_compile(u_t, x_sym, t_sym),
        u_x=_compile(u_x, x_sym, t_sym),
        u_tt=_compile(exprs["u_tt"], x_sym, t_sym),
        u_tx=_compile(exprs["u_tx"], x_sym, t_sym),
        u_xx=_compile(exprs["u_xx"], x_sym, t_sym),
        expressions=exprs,
    )


def wave_system(p: WaveProblem) -> PDESystem:
    """First-order form with z = (u, v, w) = (u, u_t, u_x)."""
    f, fprime = p.f, p.fprime

    def grad_S(z):
        z = np.asarray(z, dtype=float)
        return np.stack([-f(z[..., 0]), z[..., 1], -z[..., 2]], axis=-1)

    def hess_S(z):
        z = np.asarray(z, dtype=float)
        H = np.zeros(z.shape + (3,))
        H[..., 0, 0] = -fprime(z[..., 0])
        H[..., 1, 1] = 1.0
        H[..., 2, 2] = -1.0
        return H

    return PDESystem(K=WAVE_K, L=WAVE_L, grad_S=grad_S, hess_S=hess_S, exact=p.state, name=p.name)


def pde_residual(p: WaveProblem, x, t, h: float = 1e-3) -> np.ndarray:
    """u_tt - u_xx - f(u) of the exact solution by fourth-order differences."""
    u = p.exact_u

    def second(shift):
        return (-shift(2 * h) + 16 * shift(h) - 30 * u(x, t) + 16 * shift(-h) - shift(-2 * h)) / (12 * h * h)

    u_tt = second(lambda d: u(x, t + d))
    u_xx = second(lambda d: u(x + d, t))
    return u_tt - u_xx - p.f(u(x, t))


_esin = sp.exp(2 * sp.sin(x_sym - t_sym - 3))
_sincos = sp.sin(x_sym) * sp.cos(t_sym)
_coscos = sp.cos(2 * x_sym) * sp.cos(sp.sqrt(5) * t_sym)
_breather = 4 * sp.atan(sp.sin(t_sym / sp.sqrt(2)) / sp.cosh(x_sym / sp.sqrt(2)))

_free = sp.Integer(0)
_klein_gordon = -u_sym ** 2 / 2
_sine_gordon = sp.cos(u_sym)

_boundary_interval = (0.2, float(sp.pi / 3))

SAMPLE_PROBLEMS = {
    "Esin": (_free, _esin, (0.0, 2 * np.pi), "periodic"),
    "Sincos": (_free, _sincos, (0.0, 2 * np.pi), "periodic"),
    "Coscos": (_klein_gordon, _coscos, (0.0, np.pi), "periodic"),
    "SineGordon": (_sine_gordon, _breather, (-30.0, 30.0), "periodic"),
    "EsinDD": (_free, _esin, _boundary_interval, "dd"),
    "SincosDD": (_free, _sincos, _boundary_interval, "dd"),
    "SincosDN": (_free, _sincos, _boundary_interval, "dn"),
    "CoscosDD": (_klein_gordon, _coscos, _boundary_interval, "dd"),
    "CoscosDN": (_klein_gordon, _coscos, _boundary_interval, "dn"),
    "SineGordonDD": (_sine_gordon, _breather, (-2.0, 2.0), "dd"),
}

_cache: Dict[str, WaveProblem] = {}


def _key(name: str) -> str:
    return "".join(ch for ch in name.lower() if ch.isalnum())


def problem_names():
    return list(SAMPLE_PROBLEMS)


def sample_problem(name: str) -> WaveProblem:
    """Look up a sample problem; case, dashes and underscores are ignored."""
    lookup = {_key(k): k for k in SAMPLE_PROBLEMS}
    canonical = lookup.get(_key(str(name)))
    if canonical is None:
        raise InvalidArgumentError(f"unknown problem {name!r}; choose from {', '.join(SAMPLE_PROBLEMS)}")
    if canonical not in _cache:
        potential, solution, domain, bc = SAMPLE_PROBLEMS[canonical]
        _cache[canonical] = make_wave_problem(canonical, potential, solution, domain, bc)
    return _cache[canonical]
