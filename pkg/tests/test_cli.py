"""CLI behavior: exit codes, outputs, summaries, exports, calibration."""

import json

import pytest
from click.testing import CliRunner

from echonav.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


class TestRun:
    def test_straight_line_success(self, runner, tmp_path):
        out = tmp_path / "runs"
        result = runner.invoke(main, [
            "run", "--scenario", "straight_line", "--fast-sonar", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert (out / "scenario.json").exists()
        csvs = list(out.glob("trajectory_*.csv"))
        reports = list(out.glob("report_*.json"))
        assert len(csvs) == 1 and len(reports) == 1
        doc = json.loads(reports[0].read_text())
        assert doc["goal_reached"] is True
        assert "goal rate: 1/1" in result.output

    def test_box_trap_fails_with_stuck_recorded(self, runner, tmp_path):
        out = tmp_path / "runs"
        result = runner.invoke(main, [
            "run", "--scenario", "box_trap", "--fast-sonar", "--out", str(out),
        ])
        assert result.exit_code == 1
        doc = json.loads(next(out.glob("report_*.json")).read_text())
        assert not doc["goal_reached"]
        assert doc["stuck_intervals"] or doc["collisions"]

    def test_bad_scenario_file_exits_2(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"name": "x"}')
        result = runner.invoke(main, ["run", "--scenario", str(bad)])
        assert result.exit_code == 2
        assert "waypoints" in result.output

    def test_missing_scenario_exits_2(self, runner):
        result = runner.invoke(main, ["run", "--scenario", "nope_nothing"])
        assert result.exit_code == 2

    def test_setup_override(self, runner, tmp_path):
        out = tmp_path / "runs"
        result = runner.invoke(main, [
            "run", "--scenario", "straight_line", "--setup", "8", "--fast-sonar",
            "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        assert (out / "trajectory_l8_s3.csv").exists()

    def test_deterministic_outputs(self, runner, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            result = runner.invoke(main, [
                "run", "--scenario", "corridor_junction", "--fast-sonar",
                "--seed", "11", "--out", str(out),
            ])
            assert result.exit_code == 0, result.output
        csv1 = next(out1.glob("trajectory_*.csv")).read_bytes()
        csv2 = next(out2.glob("trajectory_*.csv")).read_bytes()
        assert csv1 == csv2


class TestBatch:
    def test_two_setup_summary(self, runner, tmp_path):
        out = tmp_path / "runs"
        result = runner.invoke(main, [
            "batch", "--scenario", "straight_line", "--setups", "1,8", "--reps", "2",
            "--fast-sonar", "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        summary = json.loads((out / "summary.json").read_text())
        assert len(summary["runs"]) == 4
        assert summary["goal_rate"] == 1.0
        assert (out / "heatmap.pgm").exists()
        assert (out / "heatmap.csv").exists()
        # one table row per run in the printed summary
        lines = [ln for ln in result.output.splitlines() if ln.strip().startswith(("1 ", "8 "))]
        assert len(lines) == 4

    def test_bad_setups_exit_2(self, runner):
        result = runner.invoke(main, ["batch", "--scenario", "straight_line", "--setups", "99"])
        assert result.exit_code == 2


class TestExport:
    def test_figures_from_run_dir(self, runner, tmp_path):
        out = tmp_path / "runs"
        result = runner.invoke(main, [
            "run", "--scenario", "straight_line", "--fast-sonar", "--out", str(out),
        ])
        assert result.exit_code == 0
        result = runner.invoke(main, ["export", "--run-dir", str(out)])
        assert result.exit_code == 0, result.output
        figs = out / "figures"
        assert (figs / "trajectories.png").exists()
        assert (figs / "heatmap.png").exists()
        assert (figs / "heatmap.pgm").exists()
        assert list(figs.glob("mask_CA_sensor0.pgm"))
        assert list(figs.glob("flow_linear_sensor0.png"))

    def test_missing_run_dir_exit_2(self, runner, tmp_path):
        result = runner.invoke(main, ["export", "--run-dir", str(tmp_path / "void")])
        assert result.exit_code == 2


class TestCalibrate:
    def test_prints_thresholds(self, runner):
        result = runner.invoke(main, ["calibrate-thresholds"])
        assert result.exit_code == 0, result.output
        assert '"t_oa": 0.1' in result.output
        assert "raw pipeline peak" in result.output

    def test_writes_file(self, runner, tmp_path):
        path = tmp_path / "cal.json"
        result = runner.invoke(main, ["calibrate-thresholds", "--out", str(path)])
        assert result.exit_code == 0
        doc = json.loads(path.read_text())
        assert doc["controller"]["t_ca"] == 0.1
        assert doc["sonar"]["raw_pipeline_peak"] > 0
