"""
Tests for the scaling-law verification report.
"""

import pytest

from impulsecli.models import MechanicalOscillator, OptimalAngle, SensorConfig, Slab, g_star
from impulsecli.scaling import (
    LAW_TOLERANCES,
    LawCheck,
    LawStatus,
    ScalingReport,
    expected_ratio,
    floor_check,
    knee_check,
    scaling_report,
    select_law,
)


@pytest.fixture
def q100_oscillator(baseline_oscillator):
    return MechanicalOscillator.from_quality_factor(baseline_oscillator.mass, baseline_oscillator.omega_m, 100.0)


class TestSelectLaw:
    """Test which analytic law applies at a grid point."""

    @pytest.mark.parametrize(
        "r, eta, law",
        [
            (0.0, 1.0, "sql"),
            (1.0, 1.0, "lossless_squeezed"),
            (0.0, 0.5, "lossy_coherent"),
            (1.0, 0.3, "small_eta"),
            (1.0, 0.01, "small_eta"),
            (1.0, 0.95, "near_lossless"),
            (1.0, 0.9, "near_lossless"),
            (1.0, 0.5, "lossy_squeezed"),
        ],
    )
    def test_regimes(self, r, eta, law):
        assert select_law(1e4, r, eta) == (law, None)

    def test_low_q_points_are_skipped(self):
        law, reason = select_law(100.0, 0.5, 1.0)
        assert law == "lossless_squeezed"
        assert "low-Q" in reason

    def test_expected_ratio_respects_floor(self, q100_oscillator):
        config = SensorConfig(q100_oscillator, Slab(g=1e3 * g_star(q100_oscillator)), OptimalAngle(3.0))
        assert expected_ratio("lossless_squeezed", q100_oscillator, config) == pytest.approx(0.1)

    def test_unknown_law(self, baseline_config):
        with pytest.raises(KeyError):
            expected_ratio("nonsense", baseline_config.oscillator, baseline_config)


class TestLawChecks:
    """Test individual law checks against optimised numerics."""

    def test_knee(self, baseline_oscillator):
        check = knee_check(baseline_oscillator, Slab(g=g_star(baseline_oscillator)))
        assert check.status is LawStatus.PASS
        assert check.expected == pytest.approx(2**0.25)
        assert check.deviation <= LAW_TOLERANCES["knee"]

    def test_knee_skipped_at_low_q(self):
        osc = MechanicalOscillator.from_quality_factor(1.0, 1.0, 10.0)
        assert knee_check(osc, Slab(g=g_star(osc))).status is LawStatus.SKIP

    @pytest.mark.slow
    def test_squeezing_floor(self, q100_oscillator):
        """Past r_max = ln(10) the optimised threshold settles at Delta p_SQL / sqrt(Q)."""
        check = floor_check(q100_oscillator, Slab(g=g_star(q100_oscillator)))
        assert check.status is LawStatus.PASS, check.note
        assert check.measured == pytest.approx(0.1, rel=LAW_TOLERANCES["squeezing_floor"])
        assert check.r > 2.0


class TestScalingReport:
    """Test the assembled report."""

    def test_small_grid_passes(self, baseline_oscillator):
        report = scaling_report(baseline_oscillator, r_grid=(0.0, 1.0), eta_grid=(1.0, 0.5), include_floor=False)
        assert report.passed, "\n".join(report.summary_lines())
        laws = [check.law for check in report.checks]
        assert laws == ["knee", "sql", "lossless_squeezed", "lossy_coherent", "lossy_squeezed"]
        assert report.summary_lines()[-1] == "ALL LAWS PASS"

    def test_loss_regimes(self, baseline_oscillator):
        report = scaling_report(baseline_oscillator, r_grid=(1.0,), eta_grid=(0.95, 0.1), include_floor=False)
        assert report.passed, "\n".join(report.summary_lines())
        assert report.by_law("near_lossless")[0].status is LawStatus.PASS
        assert report.by_law("small_eta")[0].status is LawStatus.PASS

    def test_lossless_grid_marks_loss_laws_skipped(self, baseline_oscillator):
        report = scaling_report(baseline_oscillator, r_grid=(0.0,), eta_grid=(1.0,), include_floor=False)
        for law in ("lossy_coherent", "small_eta", "near_lossless"):
            (check,) = report.by_law(law)
            assert check.status is LawStatus.SKIP
        assert report.passed

    def test_low_q_rows_do_not_fail_the_report(self, q100_oscillator):
        report = scaling_report(q100_oscillator, r_grid=(0.5,), eta_grid=(1.0,), include_floor=False)
        (check,) = report.by_law("lossless_squeezed")
        assert check.status is LawStatus.SKIP
        assert report.passed

    def test_serialisation(self, baseline_oscillator):
        report = scaling_report(baseline_oscillator, r_grid=(0.0,), eta_grid=(1.0,), include_floor=False)
        payload = report.to_dict()
        assert payload["passed"] is True
        assert payload["failed_laws"] == []
        assert payload["quality_factor"] == pytest.approx(1e4)
        skipped = [c for c in payload["checks"] if c["status"] == "SKIP"]
        assert all(c["measured"] is None for c in skipped)

    def test_process_pool_keeps_grid_order(self, baseline_oscillator):
        serial = scaling_report(baseline_oscillator, r_grid=(0.0, 1.0), eta_grid=(1.0, 0.5), include_floor=False)
        pooled = scaling_report(baseline_oscillator, r_grid=(0.0, 1.0), eta_grid=(1.0, 0.5), include_floor=False, workers=2)
        assert pooled.checks == serial.checks
        assert [(check.r, check.eta) for check in pooled.checks[1:]] == [(0.0, 1.0), (1.0, 1.0), (0.0, 0.5), (1.0, 0.5)]

    def test_rejects_empty_grid(self, baseline_oscillator):
        with pytest.raises(ValueError):
            scaling_report(baseline_oscillator, r_grid=(), eta_grid=(1.0,))


class TestReportVerdicts:
    """Test pass/fail bookkeeping without running the optimiser."""

    def test_failures_and_errors_fail_the_report(self):
        report = ScalingReport(
            quality_factor=1e4,
            checks=[
                LawCheck(law="sql", status=LawStatus.PASS, r=0.0, eta=1.0, measured=1.0, expected=1.0, deviation=0.0, tolerance=0.05),
                LawCheck(law="small_eta", status=LawStatus.FAIL, r=1.0, eta=0.1, measured=1.5, expected=1.0, deviation=0.5, tolerance=0.1),
                LawCheck(law="lossy_coherent", status=LawStatus.ERROR, r=0.0, eta=0.5, note="quadrature did not converge"),
            ],
        )
        assert not report.passed
        assert report.to_dict()["failed_laws"] == ["lossy_coherent", "small_eta"]
        assert report.summary_lines()[-1] == "FAILED: lossy_coherent, small_eta"

    def test_describe(self):
        line = LawCheck(law="sql", status=LawStatus.PASS, r=0.0, eta=1.0, measured=1.001, expected=1.0, deviation=0.001, tolerance=0.05).describe()
        assert line.startswith("PASS")
        assert "measured=1.00100" in line
        skipped = LawCheck(law="small_eta", status=LawStatus.SKIP, note="low-Q regime").describe()
        assert "(low-Q regime)" in skipped
        assert "measured" not in skipped
