"""
Module 2: Generate figures from the reproduced convergence tables and an
optional bench CSV.
"""

import logging
import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402
import seaborn as sns  # noqa: E402

from diamond.parallel import fit_serial_fraction  # noqa: E402
from diamond.plots import plot_error_curves, plot_speedup  # noqa: E402

# === Paths ===
TABLE_DIR = Path("data/processed/convergence")
ORDERS_PATH = TABLE_DIR / "observed_orders.csv"
BENCH_DIR = Path("out")
FIGURE_DIR = Path("docs/figures")

TABLE_NAME = re.compile(r"(?P<problem>\w+?)_(?P<init>exact|diamond|phantom)_r(?P<r>\d+)\.csv")

logger = logging.getLogger("generate_report_visuals")


def load_tables():
    frames = []
    for path in sorted(TABLE_DIR.glob("*_r*.csv")):
        match = TABLE_NAME.fullmatch(path.name)
        if match is None:
            continue
        frames.append(pd.read_csv(path).assign(problem=match["problem"], init=match["init"], r=int(match["r"])))
    return pd.concat(frames, ignore_index=True)


def plot_order_heatmap(orders):
    pivot = orders.assign(run=orders["problem"] + " / " + orders["init"]).pivot(index="run", columns="r",
                                                                                values="order")
    plt.figure(figsize=(6, 3.5))
    sns.heatmap(pivot, annot=True, fmt=".1f", cmap="Blues", cbar=False)
    plt.title("Observed order of convergence")
    plt.xlabel("stages r")
    plt.ylabel("")
    plt.tight_layout()
    path = FIGURE_DIR / "observed_orders.svg"
    plt.savefig(path)
    plt.close()
    logger.info("Saved: %s", path)


def main():
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s")
    FIGURE_DIR.mkdir(parents=True, exist_ok=True)

    tables = load_tables()
    for (problem, init), df in tables.groupby(["problem", "init"]):
        plot_error_curves(df, FIGURE_DIR / f"{problem}_{init}.svg", title=f"{problem}, {init} init")

    plot_order_heatmap(pd.read_csv(ORDERS_PATH))

    for path in sorted(BENCH_DIR.glob("bench_*.csv")):
        bench = pd.read_csv(path)
        model = fit_serial_fraction(bench[["workers", "wall_seconds"]].to_numpy())
        plot_speedup(bench, FIGURE_DIR / f"{path.stem}.svg", model)
    logger.info("All figures saved to %s", FIGURE_DIR)


if __name__ == "__main__":
    main()
