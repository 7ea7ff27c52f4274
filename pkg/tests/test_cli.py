"""Command-line subcommands, exit codes and output files."""

import logging

import pandas as pd
import pytest

from diamond.cli import main


def _main(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path), "--log-level", "WARNING"])


class TestRun:
    def test_single_run_writes_snapshots_and_summary(self, tmp_path):
        assert _main(tmp_path, "run", "--problem", "sincos", "--r", "1", "--cells", "40", "--t-final", "0.5") == 0
        snapshots = pd.read_csv(tmp_path / "run_Sincos_r1_N40_snapshots.csv")
        summary = pd.read_csv(tmp_path / "run_Sincos_r1_N40_summary.csv")
        assert len(snapshots) == 2 * 40 * 1
        assert list(snapshots.columns) == ["x", "t", "u", "v", "w"]
        assert summary["t_final"].iloc[0] == pytest.approx(0.5)
        assert 0 < summary["error"].iloc[0] < 0.1

    def test_recorded_snapshots(self, tmp_path):
        assert _main(tmp_path, "run", "--cells", "8", "--r", "2", "--snapshots", "2") == 0
        snapshots = pd.read_csv(tmp_path / "run_Sincos_r2_N8_snapshots.csv")
        # default t_final is 4 half-steps: states after 0, 2 and 4
        assert len(snapshots) == 3 * 2 * 8 * 2

    def test_threads_give_the_same_summary_error(self, tmp_path):
        assert _main(tmp_path / "a", "run", "--cells", "12", "--threads", "1") == 0
        assert _main(tmp_path / "b", "run", "--cells", "12", "--threads", "3") == 0
        a = pd.read_csv(tmp_path / "a" / "run_Sincos_r1_N12_summary.csv")
        b = pd.read_csv(tmp_path / "b" / "run_Sincos_r1_N12_summary.csv")
        assert b["error"].iloc[0] == pytest.approx(a["error"].iloc[0], rel=1e-9)
        assert b["workers"].iloc[0] == 3

    def test_unknown_problem_is_a_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            _main(tmp_path, "run", "--problem", "KdV")
        assert info.value.code == 2

    def test_large_courant_number_warns(self, tmp_path, caplog):
        with caplog.at_level(logging.WARNING, logger="diamond.cli"):
            _main(tmp_path, "run", "--cells", "8", "--courant", "1.5")
        assert "exceeds 1" in caplog.text


class TestConverge:
    def test_sweep_writes_tables(self, tmp_path):
        code = _main(tmp_path, "converge", "--problem", "sincos", "--r", "1", "2", "--cells", "8", "--levels", "3",
                     "--plot")
        assert code == 0
        table = pd.read_csv(tmp_path / "converge_Sincos_exact_periodic_r2.csv")
        assert list(table["N"]) == [8, 16, 32]
        assert table["error"].is_monotonic_decreasing
        orders = pd.read_csv(tmp_path / "orders_Sincos_exact_periodic.csv")
        assert list(orders["r"]) == [1, 2]
        assert (tmp_path / "converge_Sincos_exact_periodic.svg").exists()

    def test_non_doubling_cells_rejected(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            _main(tmp_path, "converge", "--cells", "10", "30")
        assert info.value.code == 2


class TestBench:
    def test_baseline_required(self, tmp_path):
        assert _main(tmp_path, "bench", "--threads", "2", "4") == 2

    def test_speedup_table(self, tmp_path):
        assert _main(tmp_path, "bench", "--cells", "12", "--threads", "1", "2", "--steps", "2", "--plot") == 0
        df = pd.read_csv(tmp_path / "bench_Sincos_r1_N12.csv")
        assert list(df.columns) == ["workers", "wall_seconds", "speedup", "fitted_B"]
        assert df.loc[df["workers"] == 1, "speedup"].iloc[0] == pytest.approx(1.0)
        assert 0.0 <= df["fitted_B"].iloc[0] <= 1.0
        assert (tmp_path / "bench_Sincos_r1_N12.svg").exists()


class TestConserve:
    def test_residuals_written(self, tmp_path):
        assert _main(tmp_path, "conserve", "--r", "1", "2", "--samples", "5", "--cells", "20") == 0
        df = pd.read_csv(tmp_path / "conserve_Sincos.csv")
        assert len(df) == 10
        assert df["residual"].max() <= 1e-10
        assert (df["random_residual"] > 1e-3).mean() >= 0.8


class TestConfigFile:
    def test_file_values_used(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("problem=SincosDD\ncells=10\nr=2\n")
        assert _main(tmp_path, "run", "--config", str(cfg)) == 0
        summary = pd.read_csv(tmp_path / "run_SincosDD_r2_N10_summary.csv")
        assert summary["bc"].iloc[0] == "dd"
