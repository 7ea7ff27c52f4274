"""
Run specification and its layering: command-line flags over an optional
key=value config file over defaults.
"""

import logging
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Tuple

from dotenv import dotenv_values

from .boundary import BC_CODES
from .core import MeshConfig, SolverConfig
from .errors import InvalidArgumentError
from .initialization import INIT_METHODS
from .problems import WaveProblem, sample_problem

logger = logging.getLogger(__name__)

DEFAULTS = {
    "problem": "Sincos",
    "r": (1,),
    "cells": (40,),
    "levels": 1,
    "courant": 0.5,
    "t_final": None,
    "init": "exact",
    "bc": None,
    "threads": (1,),
    "tol": 1e-12,
    "max_iter": 50,
    "jacobian": "analytic",
    "out": Path("out"),
    "snapshots": 0,
    "seed": 0,
    "samples": 100,
    "steps": 20,
    "plot": False,
}

_INT_LISTS = {"r", "cells", "threads"}
_INTS = {"levels", "max_iter", "snapshots", "seed", "samples", "steps"}
_FLOATS = {"courant", "t_final", "tol"}


@dataclass(frozen=True)
class RunSpec:
    problem: str
    r: Tuple[int, ...]
    cells: Tuple[int, ...]
    levels: int
    courant: float
    t_final: Optional[float]
    init: str
    bc: Optional[str]
    threads: Tuple[int, ...]
    tol: float
    max_iter: int
    jacobian: str
    out: Path
    snapshots: int
    seed: int
    samples: int
    steps: int
    plot: bool

    def __post_init__(self):
        wave = sample_problem(self.problem)
        object.__setattr__(self, "problem", wave.name)
        if self.bc is None:
            object.__setattr__(self, "bc", wave.bc)
        if self.bc not in BC_CODES:
            raise InvalidArgumentError(f"unknown boundary code {self.bc!r}; choose from {', '.join(BC_CODES)}")
        if self.init not in INIT_METHODS:
            raise InvalidArgumentError(f"unknown init method {self.init!r}; choose from {', '.join(INIT_METHODS)}")
        for name in ("r", "cells", "threads"):
            values = getattr(self, name)
            if not values or any(v < 1 for v in values):
                raise InvalidArgumentError(f"--{name} needs positive integers, got {values}")
        if not self.courant > 0 or (self.t_final is not None and not self.t_final > 0):
            raise InvalidArgumentError("--courant and --t-final must be positive")
        if self.levels < 1 or self.max_iter < 1 or self.snapshots < 0 or self.samples < 1 or self.steps < 1:
            raise InvalidArgumentError("counts must be positive")
        self.solver_config()

    @property
    def wave_problem(self) -> WaveProblem:
        return sample_problem(self.problem)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(tol=self.tol, max_iter=self.max_iter, jacobian_mode=self.jacobian)

    def sweep(self) -> Tuple[int, ...]:
        """Cell counts of a convergence sweep; each must double the previous one."""
        cells = self.cells
        if len(cells) == 1 and self.levels > 1:
            cells = tuple(cells[0] * 2 ** k for k in range(self.levels))
        for lo, hi in zip(cells, cells[1:]):
            if hi != 2 * lo:
                raise InvalidArgumentError(f"convergence sweeps need doubling cell counts, got {cells}")
        return cells


def _key(raw: str) -> str:
    return raw.strip().lower().lstrip("-").replace("-", "_")


def parse_value(key: str, raw) -> object:
    if raw is None:
        return None
    if isinstance(raw, str):
        raw = raw.strip()
        if key in _INT_LISTS:
            return tuple(int(v) for v in raw.replace(",", " ").split())
        if key in _INTS:
            return int(raw)
        if key in _FLOATS:
            return None if raw.lower() in ("", "none") else float(raw)
        if key == "out":
            return Path(raw)
        if key == "plot":
            return raw.lower() in ("1", "true", "yes", "on")
    return raw


def read_config_file(path: Optional[Path]) -> dict:
    """Parse a key=value file; keys are flag names with dashes or underscores."""
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise InvalidArgumentError(f"config file {path} not found")
    values = {}
    for raw_key, raw in dotenv_values(path).items():
        key = _key(raw_key)
        if key not in DEFAULTS:
            raise InvalidArgumentError(f"unknown config key {raw_key!r} in {path}")
        try:
            values[key] = parse_value(key, raw)
        except ValueError as exc:
            raise InvalidArgumentError(f"bad value for {raw_key!r} in {path}: {raw!r}") from exc
    return values


def resolve(cli: dict, config_path: Optional[Path] = None) -> RunSpec:
    merged = dict(DEFAULTS)
    merged.update(read_config_file(config_path))
    merged.update({k: v for k, v in cli.items() if k in DEFAULTS and v is not None})
    for name in ("r", "cells", "threads"):
        merged[name] = tuple(merged[name])
    merged["out"] = Path(merged["out"])
    return RunSpec(**{f.name: merged[f.name] for f in fields(RunSpec)})


def fitted_mesh(p: WaveProblem, N: int, courant: float, t_final: float) -> MeshConfig:
    """Mesh whose dt is the largest value <= courant dx that divides t_final into half-steps."""
    a, b = p.domain
    dt0 = courant * (b - a) / N
    half_steps = max(2, math.ceil(2.0 * t_final / dt0 - 1e-9))
    dt = 2.0 * t_final / half_steps
    if abs(dt - dt0) > 1e-12 * dt0:
        logger.info("dt adjusted from %.6g to %.6g so that t_final=%g is reached exactly", dt0, dt, t_final)
    return MeshConfig(a=a, b=b, N=N, dt=dt, t_final=t_final)
