"""
Command-line front end.

    python -m diamond run      --problem sincos --r 1 --cells 40 --t-final 0.5
    python -m diamond converge --problem sinegordon --init diamond --r 1 2 3 --cells 40 --levels 4
    python -m diamond bench    --problem sinegordon --r 5 --cells 2000 --threads 1 2 4 --steps 200
    python -m diamond conserve --problem sincos --r 1 2 3 --samples 100

Exit codes: 0 success, 1 runtime or solver failure, 2 usage error.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from .boundary import BC_CODES, boundary_spec
from .config import RunSpec, fitted_mesh, resolve
from .core import MeshConfig, StageSolver, diamond_coordinates, transform_coeffs
from .diagnostics import (FLOAT_FORMAT, ErrorTable, conservation_residual, conservation_table, fit_order,
                          random_variation, variation_pair)
from .errors import DiamondError, InvalidArgumentError
from .initialization import INIT_METHODS, zigzag_nodes
from .parallel import fit_serial_fraction, parallel_run
from .problems import problem_names, wave_system
from .tableau import gauss_tableau
from .timeloop import RunReport, run

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


def _save(df: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info("Saved: %s", path)
    return path


def _warn_cfl(mesh: MeshConfig) -> None:
    if mesh.courant > 1.0:
        logger.warning("Courant number %.3g exceeds 1; the scheme is linearly stable only for "
                       "lambda = dt/dx <= 1", mesh.courant)


def _execute(spec: RunSpec, mesh: MeshConfig, r: int, threads: int, snapshot_every: int = 0) -> RunReport:
    p = spec.wave_problem
    bc = boundary_spec(spec.bc, p)
    tab = gauss_tableau(r)
    if threads > 1:
        return parallel_run(p, mesh, tab, spec.init, bc, spec.solver_config(), threads, snapshot_every)
    return run(p, mesh, tab, spec.init, bc, spec.solver_config(), snapshot_every)


def snapshot_frame(report: RunReport, mesh: MeshConfig) -> pd.DataFrame:
    """x, t, u, v, w at every zig-zag node of every recorded state."""
    tab = gauss_tableau(report.r)
    states = report.snapshots or [report.final_state]
    frames = []
    for state in states:
        x, t = zigzag_nodes(mesh, tab, state.parity, state.row_time)
        z = state.edges.reshape(-1, state.edges.shape[-1])
        frames.append(pd.DataFrame({"x": x.ravel(), "t": t.ravel(), "u": z[:, 0], "v": z[:, 1], "w": z[:, 2]}))
    return pd.concat(frames, ignore_index=True)


def cmd_run(spec: RunSpec) -> List[Path]:
    r, N = spec.r[0], spec.cells[0]
    p = spec.wave_problem
    t_final = spec.t_final
    if t_final is None:
        t_final = 2.0 * spec.courant * (p.b - p.a) / N
    mesh = fitted_mesh(p, N, spec.courant, t_final)
    _warn_cfl(mesh)
    report = _execute(spec, mesh, r, spec.threads[0], spec.snapshots)

    stem = f"run_{p.name}_r{r}_N{N}"
    return [
        _save(snapshot_frame(report, mesh), spec.out / f"{stem}_snapshots.csv"),
        _save(pd.DataFrame([report.summary()]), spec.out / f"{stem}_summary.csv"),
    ]


def cmd_converge(spec: RunSpec) -> List[Path]:
    p = spec.wave_problem
    cells = spec.sweep()
    written, orders, curves = [], [], []
    for r in spec.r:
        t_final = spec.t_final
        if t_final is None:
            t_final = 2.0 * spec.courant * (p.b - p.a) / cells[0]
        table = ErrorTable(problem=p.name, init=spec.init, bc=spec.bc, r=r)
        for N in cells:
            mesh = fitted_mesh(p, N, spec.courant, t_final)
            _warn_cfl(mesh)
            report = _execute(spec, mesh, r, spec.threads[0])
            table.add(N, mesh.dx, mesh.dt, report.error)
        fit = fit_order(table)
        logger.info("%s r=%d: observed order %.2f", p.name, r, fit.order)
        orders.append({"problem": p.name, "init": spec.init, "bc": spec.bc, "r": r,
                       "order": fit.order, "rows_used": fit.rows_used})
        written.append(table.to_csv(spec.out / f"converge_{p.name}_{spec.init}_{spec.bc}_r{r}.csv"))
        curves.append(table.frame().assign(r=r))

    written.append(_save(pd.DataFrame(orders), spec.out / f"orders_{p.name}_{spec.init}_{spec.bc}.csv"))
    if spec.plot:
        from .plots import plot_error_curves

        written.append(plot_error_curves(pd.concat(curves, ignore_index=True),
                                         spec.out / f"converge_{p.name}_{spec.init}_{spec.bc}.svg",
                                         title=f"{p.name}, {spec.init} init"))
    return written


def cmd_bench(spec: RunSpec) -> List[Path]:
    if 1 not in spec.threads:
        raise InvalidArgumentError("bench needs 1 in --threads to define the baseline")
    p = spec.wave_problem
    r, N = spec.r[0], spec.cells[0]
    dt = spec.courant * (p.b - p.a) / N
    mesh = MeshConfig(a=p.a, b=p.b, N=N, dt=dt, t_final=spec.steps * dt)
    tab, bc = gauss_tableau(r), boundary_spec(spec.bc, p)
    timings = []
    for workers in spec.threads:
        # the single-worker baseline goes through the same executor
        report = parallel_run(p, mesh, tab, spec.init, bc, spec.solver_config(), workers)
        timings.append((workers, report.wall_seconds))
        logger.info("%d worker(s): %.3fs", workers, report.wall_seconds)

    model = fit_serial_fraction(timings)
    df = pd.DataFrame(timings, columns=["workers", "wall_seconds"])
    df["speedup"] = model.T1 / df["wall_seconds"]
    df["fitted_B"] = model.B
    written = [_save(df, spec.out / f"bench_{p.name}_r{r}_N{N}.csv")]
    if spec.plot:
        from .plots import plot_speedup

        written.append(plot_speedup(df, spec.out / f"bench_{p.name}_r{r}_N{N}.svg", model))
    return written


def cmd_conserve(spec: RunSpec) -> List[Path]:
    p = spec.wave_problem
    pde = wave_system(p)
    rng = np.random.default_rng(spec.seed)
    N = spec.cells[0]
    mesh = MeshConfig.from_courant(p.a, p.b, N, spec.courant, 0.0)
    coeffs = transform_coeffs(pde, mesh.dx, mesh.dt)
    rows = []
    for r in spec.r:
        tab = gauss_tableau(r)
        solver = StageSolver.interior(pde, tab, coeffs, spec.solver_config())
        for sample in range(spec.samples):
            x_b = rng.uniform(p.a, p.b)
            t_b = rng.uniform(0.0, 1.0)
            z_left = pde.exact(*diamond_coordinates(x_b, t_b, mesh.dx, mesh.dt, 0.0, tab.c))
            z_bottom = pde.exact(*diamond_coordinates(x_b, t_b, mesh.dx, mesh.dt, tab.c, 0.0))
            v1, v2 = variation_pair(solver, z_left, z_bottom, rng)
            w1, w2 = random_variation(rng, tab, pde.n), random_variation(rng, tab, pde.n)
            rows.append({"r": r, "sample": sample,
                         "residual": conservation_residual(v1, v2, pde, tab, mesh),
                         "random_residual": conservation_residual(w1, w2, pde, tab, mesh)})
        df = pd.DataFrame([row for row in rows if row["r"] == r])
        logger.info("r=%d: max residual %.3e, random data above 1e-3 in %d/%d samples", r,
                    df["residual"].max(), int((df["random_residual"] > 1e-3).sum()), len(df))
    conservation_table(rows, spec.out / f"conserve_{p.name}.csv")
    return [spec.out / f"conserve_{p.name}.csv"]


COMMANDS = {"run": cmd_run, "converge": cmd_converge, "bench": cmd_bench, "conserve": cmd_conserve}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value file with defaults for any flag")
    common.add_argument("--problem", help=f"one of {', '.join(problem_names())}")
    common.add_argument("--r", type=int, nargs="+", help="Gauss stage count(s)")
    common.add_argument("--cells", type=int, nargs="+", help="diamonds per row N")
    common.add_argument("--courant", type=float, help="dt/dx")
    common.add_argument("--t-final", dest="t_final", type=float)
    common.add_argument("--init", choices=INIT_METHODS)
    common.add_argument("--bc", choices=list(BC_CODES))
    common.add_argument("--threads", type=int, nargs="+")
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iter", dest="max_iter", type=int)
    common.add_argument("--jacobian", choices=["analytic", "finite-difference"])
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--snapshots", type=int, help="record every K-th half-step")
    common.add_argument("--seed", type=int)
    common.add_argument("--plot", action="store_true", default=None, help="also write an SVG plot")
    common.add_argument("--log-level", dest="log_level", default=None)

    parser = argparse.ArgumentParser(prog="diamond", description="Diamond-scheme multisymplectic integrator")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="single simulation")
    conv = sub.add_parser("converge", parents=[common], help="convergence sweep over doubling N")
    conv.add_argument("--levels", type=int, help="number of doublings of the first --cells value")
    bench = sub.add_parser("bench", parents=[common], help="parallel speedup benchmark")
    bench.add_argument("--steps", type=int, help="full time steps per run")
    conserve = sub.add_parser("conserve", parents=[common], help="discrete conservation law sweep")
    conserve.add_argument("--samples", type=int, help="random variation pairs per r")
    return parser


def _configure_logging(level: Optional[str]) -> None:
    load_dotenv()
    level = (level or os.getenv("DIAMOND_LOG_LEVEL") or "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.log_level)

    try:
        spec = resolve(vars(args), args.config)
        if args.command == "converge":
            spec.sweep()
    except InvalidArgumentError as exc:
        parser.error(str(exc))

    try:
        COMMANDS[args.command](spec)
    except InvalidArgumentError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
    except (DiamondError, OSError) as exc:
        logger.error("%s failed: %s", args.command, exc)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
