"""
Tests for the Monte Carlo matched-filter check.
"""

import math

import numpy as np
import pytest

from impulsecli.errors import ValidationError
from impulsecli.models import MechanicalOscillator, SensorConfig, Slab, g_star
from impulsecli.simulate import (
    KickTimePolicy,
    SimSpec,
    alternative_filters,
    band_limited_threshold,
    check_resolution,
    expected_filter_snr,
    frequency_grid,
    matched_filter_snr,
    matched_weights,
    normality_check,
    periodogram,
    synthesize_noise,
    trial_rng,
)
from impulsecli.spectra import force_psd_value
from impulsecli.threshold import band_limited_snr


@pytest.fixture
def sim_config(baseline_oscillator):
    """Default slab at the optimal coupling with Q lowered to 100 so ring-downs fit in a few ms."""
    osc = MechanicalOscillator.from_quality_factor(baseline_oscillator.mass, baseline_oscillator.omega_m, 100.0)
    return SensorConfig(osc, Slab(g=g_star(osc)))


@pytest.fixture
def sim_spec():
    return SimSpec(sample_rate=4e6, duration=5e-3, seed=0, n_trials=300)


class TestSimSpec:
    """Test simulation settings."""

    def test_derived_quantities(self, sim_spec):
        assert sim_spec.n_samples == 20000
        assert sim_spec.dt == pytest.approx(2.5e-7)
        lo, hi = sim_spec.band
        assert lo == pytest.approx(2 * math.pi / 5e-3)
        assert hi == pytest.approx(math.pi * 4e6)

    @pytest.mark.parametrize(
        "kwargs, field",
        [
            (dict(sample_rate=0.0, duration=1e-3), "sample_rate"),
            (dict(sample_rate=1e6, duration=-1.0), "duration"),
            (dict(sample_rate=1e6, duration=1e-3, n_trials=1), "n_trials"),
            (dict(sample_rate=1e6, duration=1e-3, kick=-1.0), "kick"),
            (dict(sample_rate=1e6, duration=1e-3, seed=-1), "seed"),
            (dict(sample_rate=1e3, duration=1e-3), "duration"),
        ],
    )
    def test_invalid_settings(self, kwargs, field):
        with pytest.raises(ValidationError) as excinfo:
            SimSpec(**kwargs)
        assert excinfo.value.field == field

    def test_kick_time_from_string(self):
        spec = SimSpec(sample_rate=1e6, duration=1e-3, kick_time="uniform-random")
        assert spec.kick_time is KickTimePolicy.UNIFORM

    def test_with_kick(self, sim_spec):
        assert sim_spec.with_kick(2.5).kick == 2.5
        assert sim_spec.kick == 0.0


class TestNoiseSynthesis:
    """Test stationary Gaussian noise generation."""

    def test_frequency_grid(self, sim_spec):
        grid = frequency_grid(sim_spec)
        assert grid.shape == (10001,)
        assert grid[0] == 0.0
        assert grid[1] - grid[0] == pytest.approx(2 * math.pi / 5e-3)

    def test_trial_streams_are_reproducible_and_distinct(self):
        first = trial_rng(7, 3).standard_normal(5)
        again = trial_rng(7, 3).standard_normal(5)
        other = trial_rng(7, 4).standard_normal(5)
        assert np.array_equal(first, again)
        assert not np.array_equal(first, other)

    def test_white_noise_variance(self):
        """A flat PSD S gives a series with variance S / dt."""
        spec = SimSpec(sample_rate=1e3, duration=4.096, seed=11)
        psd = np.full(spec.n_samples // 2 + 1, 2.0)
        variances = [np.var(synthesize_noise(psd, spec, trial=t)) for t in range(20)]
        assert np.mean(variances) == pytest.approx(2.0 / spec.dt, rel=0.02)

    def test_periodogram_recovers_shaped_psd(self, sim_config):
        spec = SimSpec(sample_rate=4e6, duration=1e-3, seed=5)
        psd = np.asarray(force_psd_value(sim_config, frequency_grid(spec)), dtype=float)
        estimates = np.mean([periodogram(synthesize_noise(psd, spec, trial=t), spec) for t in range(200)], axis=0)
        ratio = estimates[1:-1] / psd[1:-1]
        assert np.mean(ratio) == pytest.approx(1.0, rel=0.02)

    def test_rejects_bad_psd(self, sim_spec):
        with pytest.raises(ValidationError):
            synthesize_noise(np.ones(10), sim_spec)
        bad = np.ones(sim_spec.n_samples // 2 + 1)
        bad[3] = 0.0
        with pytest.raises(ValidationError):
            synthesize_noise(bad, sim_spec)


class TestFilters:
    """Test the discrete matched filter and its alternatives."""

    def test_discrete_snr_matches_band_limited_integral(self, sim_config, sim_spec):
        psd = np.asarray(force_psd_value(sim_config, frequency_grid(sim_spec)), dtype=float)
        discrete = expected_filter_snr(psd, matched_weights(psd), sim_spec, kick=1.0)
        lo, hi = sim_spec.band
        assert discrete == pytest.approx(band_limited_snr(sim_config, 1.0, lo, hi), rel=0.01)

    def test_matched_filter_is_optimal(self, sim_config, sim_spec):
        psd = np.asarray(force_psd_value(sim_config, frequency_grid(sim_spec)), dtype=float)
        best = expected_filter_snr(psd, matched_weights(psd), sim_spec, kick=1.0)
        alternatives = alternative_filters(sim_spec, sim_config.oscillator.omega_m)
        assert "flat" in alternatives
        assert len(alternatives) == 8
        for weights in alternatives.values():
            assert expected_filter_snr(psd, weights, sim_spec, kick=1.0) < best

    def test_matched_weights_exclude_dc(self):
        weights = matched_weights(np.array([1.0, 2.0, 4.0]))
        assert list(weights) == [0.0, 0.5, 0.25]


class TestResolution:
    """Test grid checks before a run."""

    def test_undersampled_resonance_rejected(self, sim_config):
        with pytest.raises(ValidationError) as excinfo:
            check_resolution(sim_config, SimSpec(sample_rate=1e6, duration=5e-3))
        assert excinfo.value.field == "sample_rate"

    def test_short_run_and_few_trials_warn(self, sim_config):
        warnings = check_resolution(sim_config, SimSpec(sample_rate=4e6, duration=1e-3, n_trials=10))
        assert len(warnings) == 2
        assert any("duration" in message for message in warnings)
        assert any("trials" in message for message in warnings)

    def test_default_grid_is_clean(self, sim_config, sim_spec):
        assert check_resolution(sim_config, sim_spec) == []


class TestNormality:
    """Test the Gaussianity check of estimator samples."""

    def test_gaussian_passes(self):
        samples = np.random.default_rng(1).standard_normal(5000)
        assert normality_check(samples).passed

    def test_skewed_fails(self):
        samples = np.random.default_rng(1).exponential(size=5000)
        check = normality_check(samples)
        assert not check.passed
        assert check.skewness > 1.0
        assert check.samples == 5000


class TestMatchedFilterSnr:
    """Test the full Monte Carlo against the analytic SNR."""

    @pytest.mark.slow
    def test_threshold_kick_gives_unit_snr(self, sim_config, sim_spec):
        kick = band_limited_threshold(sim_config, sim_spec)
        summary = matched_filter_snr(sim_config, sim_spec.with_kick(kick))
        assert summary.band_limited_snr == pytest.approx(1.0, rel=1e-9)
        assert summary.expected_snr == pytest.approx(1.0, rel=0.01)
        assert summary.consistent, f"{summary.empirical_snr} +/- {summary.standard_error}"
        assert summary.warnings == []
        assert summary.normality.passed
        assert len(summary.outcomes) == 300
        matched = next(f for f in summary.filters if f.name == "matched")
        assert all(matched.expected_snr > f.expected_snr for f in summary.filters if f.name != "matched")

    def test_runs_are_deterministic_across_workers(self, sim_config):
        spec = SimSpec(sample_rate=4e6, duration=1e-3, seed=3, n_trials=20, kick=1e-10)
        serial = matched_filter_snr(sim_config, spec)
        threaded = matched_filter_snr(sim_config, spec, workers=3)
        assert [o.estimator_peak for o in serial.outcomes] == [o.estimator_peak for o in threaded.outcomes]
        assert serial.empirical_snr == threaded.empirical_snr

    def test_uniform_kick_times(self, sim_config):
        spec = SimSpec(sample_rate=4e6, duration=1e-3, seed=2, n_trials=20, kick_time=KickTimePolicy.UNIFORM)
        summary = matched_filter_snr(sim_config, spec)
        indices = {o.kick_index for o in summary.outcomes}
        assert len(indices) > 1
        assert all(0 <= i < spec.n_samples for i in indices)

    def test_fixed_kick_time_is_midpoint(self, sim_config):
        spec = SimSpec(sample_rate=4e6, duration=1e-3, seed=2, n_trials=5)
        summary = matched_filter_snr(sim_config, spec)
        assert {o.kick_index for o in summary.outcomes} == {2000}
