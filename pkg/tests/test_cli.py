"""
Tests for the CLI module.
"""

import copy
import json
import math
import os
from pathlib import Path

import pytest

from impulsecli import __version__, cli as cli_module
from impulsecli.cli import EXIT_CONFIG_ERROR, EXIT_NUMERICAL_ERROR, EXIT_VERIFICATION_FAILED, cli
from impulsecli.runs import PSD_COLUMNS
from impulsecli.scaling import LawCheck, LawStatus, ScalingReport

pytestmark = pytest.mark.cli


@pytest.fixture
def single_point_scenario(write_scenario, small_verify_scenario):
    raw = copy.deepcopy(small_verify_scenario)
    raw["sweep"] = {"variable": "nu", "from": "100 kHz", "points": 1}
    return write_scenario(raw, "single.yaml")


@pytest.fixture
def coupling_sweep_scenario(write_scenario, small_verify_scenario):
    raw = copy.deepcopy(small_verify_scenario)
    raw["sweep"] = {"variable": "g", "scale": "log", "from": "1 g*", "to": "10 g*", "points": 2}
    return write_scenario(raw, "coupling.yaml")


class TestCLI:
    """Test top-level CLI behaviour."""

    def test_help(self, cli_runner):
        result = cli_runner.invoke(cli, ["--help"])
        assert result.exit_code == 0
        assert "quantum-limited impulse sensing" in result.output
        for command in ("psd", "optimal-angle", "threshold", "verify", "simulate", "info", "settings"):
            assert command in result.output

    def test_short_help_flag(self, cli_runner):
        result = cli_runner.invoke(cli, ["psd", "-h"])
        assert result.exit_code == 0
        assert "--coupling" in result.output

    def test_version(self, cli_runner):
        result = cli_runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output


class TestPsdCommand:
    """Test the psd subcommand."""

    def test_default_scenario_to_file(self, cli_runner, tmp_path):
        out = tmp_path / "psd.csv"
        result = cli_runner.invoke(cli, ["psd", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert f"✅ Wrote 201 rows to {out}" in result.output

        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(PSD_COLUMNS)
        assert len(lines) == 202

    def test_single_point_to_stdout(self, cli_runner, single_point_scenario):
        result = cli_runner.invoke(cli, ["psd", "-c", single_point_scenario, "-q"])
        assert result.exit_code == 0, result.output
        lines = result.output.splitlines()
        assert lines[0] == ",".join(PSD_COLUMNS)
        assert len(lines) == 2
        frequency, total, shot, backaction, cross, loss = (float(v) for v in lines[1].split(","))
        assert frequency == pytest.approx(1e5)
        assert shot == pytest.approx(backaction, rel=1e-9)
        assert total == pytest.approx(shot + backaction + cross + loss, rel=1e-9)

    def test_json_with_coupling_override(self, cli_runner, tmp_path):
        out = tmp_path / "psd.json"
        result = cli_runner.invoke(cli, ["psd", "--coupling", "10 g*", "-f", "json", "-o", str(out)])
        assert result.exit_code == 0, result.output
        payload = json.loads(out.read_text())
        assert payload["scenario"] == "table1"
        assert payload["g_over_g_star"] == pytest.approx(10.0)
        assert len(payload["rows"]) == 201

    def test_default_format_from_settings(self, cli_runner, tmp_path):
        cli_runner.invoke(cli, ["settings", "--default-format", "json"])
        out = tmp_path / "psd.out"
        result = cli_runner.invoke(cli, ["psd", "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert json.loads(out.read_text())["columns"] == PSD_COLUMNS

    def test_zero_coupling_is_a_numerical_failure(self, cli_runner, single_point_scenario):
        result = cli_runner.invoke(cli, ["psd", "-c", single_point_scenario, "--coupling", "0"])
        assert result.exit_code == EXIT_NUMERICAL_ERROR
        assert "❌ Numerical failure" in result.output

    def test_psd_needs_frequency_sweep(self, cli_runner, coupling_sweep_scenario):
        result = cli_runner.invoke(cli, ["psd", "-c", coupling_sweep_scenario])
        assert result.exit_code == EXIT_CONFIG_ERROR
        assert "sweep.variable" in result.output


class TestConfigErrors:
    """Test that bad scenarios exit with the configuration code."""

    def test_unknown_unit(self, cli_runner, write_scenario, small_verify_scenario):
        raw = copy.deepcopy(small_verify_scenario)
        raw["system"]["mass"] = "1 stone"
        result = cli_runner.invoke(cli, ["info", "-c", write_scenario(raw)])
        assert result.exit_code == EXIT_CONFIG_ERROR
        assert "❌ Configuration error" in result.output
        assert "system.mass" in result.output

    def test_missing_file(self, cli_runner, tmp_path):
        result = cli_runner.invoke(cli, ["psd", "-c", str(tmp_path / "missing.yaml")])
        assert result.exit_code == EXIT_CONFIG_ERROR
        assert "scenario file not found" in result.output

    def test_bad_coupling_override(self, cli_runner):
        result = cli_runner.invoke(cli, ["psd", "--coupling", "5 W"])
        assert result.exit_code == EXIT_CONFIG_ERROR
        assert "--coupling" in result.output


class TestOptimalAngleCommand:
    """Test the optimal-angle subcommand."""

    def test_wrapped_and_unwrapped_columns(self, cli_runner, tmp_path):
        out = tmp_path / "angle.csv"
        result = cli_runner.invoke(cli, ["optimal-angle", "-o", str(out)])
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "frequency_Hz,theta_rad,theta_unwrapped_rad"
        assert len(lines) == 202


class TestThresholdCommand:
    """Test the threshold subcommand."""

    def test_coupling_sweep(self, cli_runner, tmp_path, coupling_sweep_scenario):
        out = tmp_path / "threshold.csv"
        result = cli_runner.invoke(cli, ["threshold", "-c", coupling_sweep_scenario, "-o", str(out)])
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "g_natural,g_over_g_star,delta_p_kg_m_s,ratio_to_sql,flags,status"
        knee, plateau = (line.split(",") for line in lines[1:])
        assert float(knee[1]) == pytest.approx(1.0)
        assert float(knee[3]) == pytest.approx(2**0.25, rel=0.01)
        assert float(plateau[3]) == pytest.approx(1.0, rel=0.01)
        assert "sql_plateau" in plateau[4]
        assert knee[5] == plateau[5] == "ok"

    def test_optimize_rejects_coupling_sweep(self, cli_runner, coupling_sweep_scenario):
        result = cli_runner.invoke(cli, ["threshold", "-c", coupling_sweep_scenario, "--optimize"])
        assert result.exit_code == EXIT_CONFIG_ERROR

    def test_frequency_sweep_rejected(self, cli_runner):
        result = cli_runner.invoke(cli, ["threshold"])
        assert result.exit_code == EXIT_CONFIG_ERROR
        assert "sweep.variable" in result.output


class TestVerifyCommand:
    """Test the verify subcommand."""

    def test_small_grid_passes(self, cli_runner, tmp_path, write_scenario, small_verify_scenario):
        out = tmp_path / "verify.json"
        result = cli_runner.invoke(cli, ["verify", "-c", write_scenario(small_verify_scenario), "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert "ALL LAWS PASS" in result.output
        assert "✅ All scaling laws pass" in result.output

        payload = json.loads(out.read_text())
        assert payload["scenario"] == "small-verify"
        assert payload["passed"] is True

    def test_lossless_scenario_skips_loss_laws(self, cli_runner, write_scenario, small_verify_scenario):
        raw = copy.deepcopy(small_verify_scenario)
        raw["verify"] = {"r": [0.0], "floor": False}
        result = cli_runner.invoke(cli, ["verify", "-c", write_scenario(raw)])
        assert result.exit_code == 0, result.output

        lines = result.output.splitlines()
        for law in ("lossy_coherent", "small_eta", "near_lossless"):
            assert any(line.startswith("SKIP") and law in line for line in lines), law
        assert "eta=0.950" not in result.output
        assert "ALL LAWS PASS" in result.output

    @pytest.mark.slow
    @pytest.mark.timeout(1200)
    def test_default_run_passes(self, cli_runner):
        """The built-in scenario passes every law, including the floor sweep past r_max."""
        result = cli_runner.invoke(cli, ["verify"])
        assert result.exit_code == 0, result.output
        assert any(line.startswith("PASS") and "squeezing_floor" in line for line in result.output.splitlines())
        assert "ALL LAWS PASS" in result.output

    def test_failed_law_exits_with_verification_code(self, cli_runner, monkeypatch):
        report = ScalingReport(
            quality_factor=1e4,
            checks=[LawCheck(law="small_eta", status=LawStatus.FAIL, r=1.0, eta=0.1, measured=1.5, expected=1.0, deviation=0.5, tolerance=0.1)],
        )
        monkeypatch.setattr(cli_module, "run_verify", lambda *args, **kwargs: report)
        result = cli_runner.invoke(cli, ["verify", "--no-floor"])
        assert result.exit_code == EXIT_VERIFICATION_FAILED
        assert "FAILED: small_eta" in result.output
        assert "❌ Scaling law(s) failed: small_eta" in result.output


class TestSimulateCommand:
    """Test the simulate subcommand."""

    def test_same_seed_same_output(self, cli_runner, tmp_path):
        args = ["simulate", "--trials", "20", "--duration", "1 ms", "--seed", "3", "--kick", "1 threshold"]
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        results = [cli_runner.invoke(cli, args + ["-o", str(path)]) for path in (first, second)]

        for result in results:
            assert result.exit_code in (0, EXIT_VERIFICATION_FAILED), result.output
            assert "⚠️" in result.output
        assert first.read_text() == second.read_text()
        lines = first.read_text().splitlines()
        assert lines[0] == "trial,kick_index,estimator_peak,snr"
        assert len(lines) == 21

    def test_undersampled_grid_rejected(self, cli_runner):
        result = cli_runner.invoke(cli, ["simulate", "--sample-rate", "300 kHz", "--duration", "1 ms", "--trials", "5"])
        assert result.exit_code == EXIT_CONFIG_ERROR
        assert "sample_rate" in result.output


class TestInfoCommand:
    """Test the info subcommand."""

    def test_text(self, cli_runner):
        result = cli_runner.invoke(cli, ["info"])
        assert result.exit_code == 0, result.output
        assert "quality_factor" in result.output
        assert "power_at_g_star_W" in result.output

    def test_json(self, cli_runner):
        result = cli_runner.invoke(cli, ["info", "-f", "json"])
        assert result.exit_code == 0, result.output
        info = json.loads(result.output)
        assert info["quality_factor"] == pytest.approx(1e4)
        assert info["g_over_g_star"] == pytest.approx(1.0)
        assert info["r_max"] == pytest.approx(0.5 * math.log(1e4))
        assert 4e-7 < info["power_at_g_star_W"] < 5e-7

    def test_db_note_is_shown(self, cli_runner, write_scenario, small_verify_scenario):
        raw = copy.deepcopy(small_verify_scenario)
        raw["squeezing"] = {"mode": "optimal", "dB": 10}
        result = cli_runner.invoke(cli, ["info", "-c", write_scenario(raw)])
        assert result.exit_code == 0, result.output
        assert "10 log10(e^(2r))" in result.output


class TestSettingsCommand:
    """Test the settings subcommand."""

    def test_show_settings(self, cli_runner):
        result = cli_runner.invoke(cli, ["settings"])
        assert result.exit_code == 0
        assert "⚙️  Impulse settings:" in result.output
        assert "rel_tol: 1e-09" in result.output
        assert "default_format: csv" in result.output

    def test_update_settings(self, cli_runner):
        result = cli_runner.invoke(cli, ["settings", "--rel-tol", "1e-7", "--workers", "2"])
        assert result.exit_code == 0
        assert "✅ Quadrature rel_tol: 1e-07" in result.output
        assert "✅ Workers: 2" in result.output

        result = cli_runner.invoke(cli, ["settings"])
        assert "workers: 2" in result.output

    def test_settings_file_location(self, cli_runner):
        result = cli_runner.invoke(cli, ["settings"])
        expected = Path(os.environ["IMPULSE_CONFIG_DIR"]) / "config.json"
        assert str(expected) in result.output

    def test_invalid_setting(self, cli_runner):
        result = cli_runner.invoke(cli, ["settings", "--workers", "0"])
        assert result.exit_code == EXIT_CONFIG_ERROR
        assert "workers" in result.output
