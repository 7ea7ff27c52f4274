"""SVG renderings of error tables and speedup fits."""

import numpy as np
import pandas as pd

from diamond.parallel import SpeedupModel
from diamond.plots import plot_error_curves, plot_speedup


class RecordingModel(SpeedupModel):
    calls = []

    def speedup(self, n):
        RecordingModel.calls.append(np.asarray(n).copy())
        return super().speedup(n)


def test_speedup_curve_comes_from_the_model(tmp_path):
    df = pd.DataFrame({"workers": [1, 2, 4], "wall_seconds": [4.0, 2.5, 1.75], "speedup": [1.0, 1.6, 2.29]})
    model = RecordingModel(B=0.25, T1=4.0)
    path = plot_speedup(df, tmp_path / "bench.svg", model)
    assert path.read_text().lstrip().startswith("<?xml")
    assert len(RecordingModel.calls) == 1
    assert RecordingModel.calls[0].max() == 4


def test_error_curves_written(tmp_path):
    dt = 0.1 / 2 ** np.arange(3)
    df = pd.DataFrame({"r": [1] * 3 + [2] * 3, "dt": np.tile(dt, 2), "error": np.concatenate([dt, dt ** 2])})
    path = plot_error_curves(df, tmp_path / "nested" / "errors.svg", title="synthetic")
    assert path.exists()
