"""
Module 1: Reproduce the convergence tables for the sample problems.

Each sweep doubles N at fixed Courant number and final time and writes
one error table per stage count, a combined order table and a JSON summary.
"""

import json
import logging
from pathlib import Path

import pandas as pd

from diamond.boundary import boundary_spec
from diamond.config import fitted_mesh
from diamond.core import SolverConfig
from diamond.diagnostics import ErrorTable, fit_order
from diamond.problems import sample_problem
from diamond.tableau import gauss_tableau
from diamond.timeloop import run

# === Paths ===
OUTPUT_DIR = Path("data/processed/convergence")
ORDERS_PATH = OUTPUT_DIR / "observed_orders.csv"
SUMMARY_JSON = OUTPUT_DIR / "observed_orders.json"

COURANT = 0.5
PERIODIC_CELLS = (40, 80, 160, 320)
BOUNDARY_CELLS = (4, 8, 16, 32, 64, 128)

# problem, init, stage counts, cell counts
SWEEPS = [
    ("SineGordon", "exact", (1, 2, 3, 4, 5), PERIODIC_CELLS),
    ("SineGordon", "diamond", (1, 2, 3, 4, 5), PERIODIC_CELLS),
    ("Esin", "diamond", (1, 2, 3), PERIODIC_CELLS),
    ("Sincos", "diamond", (1, 2, 3), PERIODIC_CELLS),
    ("Coscos", "diamond", (1, 2, 3), PERIODIC_CELLS),
    ("EsinDD", "diamond", (1, 2, 3), BOUNDARY_CELLS),
    ("SincosDN", "diamond", (1, 2, 3), BOUNDARY_CELLS),
    ("CoscosDN", "diamond", (1, 2, 3), BOUNDARY_CELLS),
    ("SineGordonDD", "diamond", (1, 2, 3), BOUNDARY_CELLS),
    # boundary initialization comparison
    ("CoscosDN", "phantom", (1, 2, 3), BOUNDARY_CELLS),
]

logger = logging.getLogger("reproduce_convergence_tables")


def sweep(name, init, r, cells):
    p = sample_problem(name)
    t_final = 2.0 * COURANT * (p.b - p.a) / cells[0]
    table = ErrorTable(problem=p.name, init=init, bc=p.bc, r=r)
    for N in cells:
        mesh = fitted_mesh(p, N, COURANT, t_final)
        report = run(p, mesh, gauss_tableau(r), init, boundary_spec(p.bc, p), SolverConfig())
        table.add(N, mesh.dx, mesh.dt, report.error)
        logger.info("%s %s r=%d N=%d: E=%.3e", name, init, r, N, report.error)
    return table


def main():
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    rows = []
    for name, init, stages, cells in SWEEPS:
        for r in stages:
            table = sweep(name, init, r, cells)
            table.to_csv(OUTPUT_DIR / f"{name}_{init}_r{r}.csv")
            fit = fit_order(table)
            rows.append({"problem": name, "init": init, "r": r, "order": round(fit.order, 2)})

    orders = pd.DataFrame(rows)
    orders.to_csv(ORDERS_PATH, index=False)
    logger.info("Saved: %s", ORDERS_PATH)

    summary = {}
    for row in rows:
        summary.setdefault(f"{row['problem']}/{row['init']}", {})[f"r={row['r']}"] = row["order"]
    with open(SUMMARY_JSON, "w") as f:
        json.dump(summary, f, indent=2)
    logger.info("Saved: %s", SUMMARY_JSON)

    print(orders.pivot(index=["problem", "init"], columns="r", values="order").to_string())


if __name__ == "__main__":
    main()
