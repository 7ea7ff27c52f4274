"""
Static log-log renderings of convergence tables and speedup measurements.
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import seaborn as sns  # noqa: E402

from .parallel import SpeedupModel  # noqa: E402

logger = logging.getLogger(__name__)


def plot_error_curves(df: pd.DataFrame, path: Path, title: str = "") -> Path:
    """One line per stage count r: error against dt, both log scaled.

    df needs columns r, dt, error.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sns.set_theme(style="whitegrid")
    plt.figure(figsize=(6, 4.5))
    data = df[df["error"] > 0]
    sns.lineplot(data=data, x="dt", y="error", hue="r", style="r", markers=True, dashes=False,
                 palette="viridis", legend="full")
    plt.xscale("log")
    plt.yscale("log")
    plt.xlabel("time step dt")
    plt.ylabel("error E")
    if title:
        plt.title(title)
    plt.tight_layout()
    plt.savefig(path)
    plt.close()
    logger.info("Saved: %s", path)
    return path


def plot_speedup(df: pd.DataFrame, path: Path, model: SpeedupModel) -> Path:
    """Measured speedup against workers with the fitted Amdahl curve."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sns.set_theme(style="whitegrid")
    plt.figure(figsize=(6, 4.5))
    n = np.linspace(1, df["workers"].max(), 200)
    plt.plot(n, model.speedup(n), color="gray", label=f"Amdahl, B = {model.B:.3g}")
    plt.plot(n, n, color="lightgray", linestyle="--", label="linear")
    sns.scatterplot(data=df, x="workers", y="speedup", s=60, label="measured")
    plt.xlabel("workers")
    plt.ylabel("speedup")
    plt.legend()
    plt.tight_layout()
    plt.savefig(path)
    plt.close()
    logger.info("Saved: %s", path)
    return path
