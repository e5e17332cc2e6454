"""
Monte Carlo check of the matched filter.

Stationary Gaussian force noise with the sensor's PSD is synthesised in the
frequency domain, a momentum kick of size Delta p_sig is added as a single
sample of height Delta p_sig / dt, and the series is passed through the
discretised optimal filter 1/S_FF. The filter output at the kick time is the
impulse estimator; its mean over trials divided by the spread of noise-only
outputs is the empirical SNR.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
import logging
import math
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy import stats

from .errors import ValidationError
from .models import SensorConfig
from .spectra import force_psd_value
from .threshold import QuadratureSpec, band_limited_snr, snr_optimal

logger = logging.getLogger(__name__)

# Resonance must be sampled at least this many times per period
MIN_SAMPLES_PER_PERIOD = 20.0

# Recommended duration in units of the ringdown time 1 / (2 pi gamma)
RECOMMENDED_RINGDOWNS = 100.0

MIN_TRIALS = 100

# Band-limited SNR below this fraction of the full-band value triggers a warning
BAND_WARNING_FRACTION = 0.9

# Lowpass corners of the alternative filters, in units of omega_m
LOWPASS_CORNERS = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)

MAX_SKEWNESS = 0.2
MAX_EXCESS_KURTOSIS = 0.5


class KickTimePolicy(Enum):
    FIXED = "fixed"
    UNIFORM = "uniform-random"


@dataclass(frozen=True)
class SimSpec:
    """Sampling, statistics and kick settings for one Monte Carlo run."""

    sample_rate: float
    duration: float
    seed: int = 0
    n_trials: int = 1000
    kick: float = 0.0
    kick_time: KickTimePolicy = KickTimePolicy.FIXED
    samples_per_trial: int = 10

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValidationError(f"must be > 0, got {self.sample_rate}", field="sample_rate")
        if not self.duration > 0:
            raise ValidationError(f"must be > 0, got {self.duration}", field="duration")
        if int(self.n_trials) < 2:
            raise ValidationError(f"need at least 2 trials, got {self.n_trials}", field="n_trials")
        if not math.isfinite(self.kick) or self.kick < 0:
            raise ValidationError(f"must be a finite value >= 0, got {self.kick}", field="kick")
        if int(self.seed) < 0:
            raise ValidationError(f"must be >= 0, got {self.seed}", field="seed")
        if int(self.samples_per_trial) < 1:
            raise ValidationError(f"must be >= 1, got {self.samples_per_trial}", field="samples_per_trial")
        object.__setattr__(self, "n_trials", int(self.n_trials))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "samples_per_trial", int(self.samples_per_trial))
        object.__setattr__(self, "kick_time", KickTimePolicy(self.kick_time))
        if self.n_samples < 4:
            raise ValidationError(f"duration x sample_rate gives only {self.n_samples} samples", field="duration")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def band(self) -> Tuple[float, float]:
        """Angular frequencies [2 pi / T, pi f_s] represented on the grid."""
        grid = frequency_grid(self)
        return float(grid[1]), float(grid[-1])

    def with_kick(self, kick: float) -> "SimSpec":
        return replace(self, kick=kick)


@dataclass(frozen=True)
class TrialOutcome:
    """Filter outputs of one trial."""

    trial: int
    kick_index: int
    estimator_peak: float
    noise_only_samples: Tuple[float, ...]


@dataclass(frozen=True)
class FilterComparison:
    name: str
    expected_snr: float
    empirical_snr: float


class NormalityCheck(NamedTuple):
    skewness: float
    excess_kurtosis: float
    samples: int
    passed: bool


@dataclass
class SimulationSummary:
    """Aggregate of a Monte Carlo run against the analytic expectation."""

    spec: SimSpec
    outcomes: List[TrialOutcome]
    empirical_snr: float
    standard_error: float
    noise_sigma: float
    expected_snr: float
    band_limited_snr: float
    full_band_snr: float
    filters: List[FilterComparison] = field(default_factory=list)
    normality: Optional[NormalityCheck] = None
    warnings: List[str] = field(default_factory=list)

    @property
    def deviation_sigmas(self) -> float:
        if self.standard_error == 0:
            return 0.0 if self.empirical_snr == self.band_limited_snr else math.inf
        return abs(self.empirical_snr - self.band_limited_snr) / self.standard_error

    @property
    def consistent(self) -> bool:
        """Empirical SNR within three standard errors of the band-limited analytic SNR."""
        return self.deviation_sigmas <= 3.0


def frequency_grid(spec: SimSpec) -> np.ndarray:
    """Angular frequencies nu_k = 2 pi k / (N dt) of the real FFT grid."""
    return 2.0 * np.pi * np.fft.rfftfreq(spec.n_samples, d=spec.dt)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial, derived from the root seed and trial index."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def _bin_multiplicity(spec: SimSpec) -> np.ndarray:
    """How often each rfft bin appears in the full two-sided spectrum."""
    n_freq = spec.n_samples // 2 + 1
    weights = np.full(n_freq, 2.0)
    weights[0] = 1.0
    if spec.n_samples % 2 == 0:
        weights[-1] = 1.0
    return weights


def synthesize_noise(psd: np.ndarray, spec: SimSpec, rng: Optional[np.random.Generator] = None, trial: int = 0) -> np.ndarray:
    """
    Real stationary Gaussian series whose PSD is ``psd`` on the simulation grid.

    Each Fourier coefficient is complex Gaussian with E|X_k|^2 = N S_k / dt;
    the DC and Nyquist coefficients are real. Without an explicit generator the
    stream for ``trial`` is derived from ``spec.seed``.
    """
    psd = np.asarray(psd, dtype=float)
    n = spec.n_samples
    if psd.shape != (n // 2 + 1,):
        raise ValidationError(f"expected {n // 2 + 1} PSD samples, got {psd.shape}", field="psd")
    if not np.all(np.isfinite(psd)) or np.any(psd <= 0):
        raise ValidationError("PSD samples must be finite and positive", field="psd")
    rng = rng if rng is not None else trial_rng(spec.seed, trial)

    amplitude = np.sqrt(n * psd / spec.dt)
    coefficients = amplitude * (rng.standard_normal(psd.size) + 1j * rng.standard_normal(psd.size)) / math.sqrt(2.0)
    coefficients[0] = amplitude[0] * rng.standard_normal()
    if n % 2 == 0:
        coefficients[-1] = amplitude[-1] * rng.standard_normal()
    return np.fft.irfft(coefficients, n=n)


def periodogram(series: np.ndarray, spec: SimSpec) -> np.ndarray:
    """|X_k|^2 dt / N, an unbiased estimate of the PSD on the grid."""
    return np.abs(np.fft.rfft(series)) ** 2 * spec.dt / spec.n_samples


def matched_weights(psd: np.ndarray) -> np.ndarray:
    """Optimal filter 1/S_FF with the DC bin excluded."""
    weights = 1.0 / np.asarray(psd, dtype=float)
    weights[0] = 0.0
    return weights


def alternative_filters(spec: SimSpec, omega_m: float) -> Dict[str, np.ndarray]:
    """A flat filter and single-pole lowpass filters with corners around omega_m."""
    nus = frequency_grid(spec)
    flat = np.ones_like(nus)
    flat[0] = 0.0
    filters = {"flat": flat}
    for corner in LOWPASS_CORNERS:
        weights = 1.0 / (1.0 + (nus / (corner * omega_m)) ** 2)
        weights[0] = 0.0
        filters[f"lowpass_{corner:g}"] = weights
    return filters


def expected_filter_snr(psd: np.ndarray, weights: np.ndarray, spec: SimSpec, kick: Optional[float] = None) -> float:
    """
    SNR of the discrete estimator with frequency weights ``weights``.

    Signal (1/(N dt)) sum W_k and noise variance (1/(N dt)) sum W_k^2 S_k, summing
    over the full two-sided grid.
    """
    kick = spec.kick if kick is None else kick
    multiplicity = _bin_multiplicity(spec)
    scale = 1.0 / (spec.n_samples * spec.dt)
    signal = scale * math.fsum(multiplicity * weights)
    variance = scale * math.fsum(multiplicity * weights**2 * psd)
    return kick * signal / math.sqrt(variance)


def _apply_filter(spectrum: np.ndarray, weights: np.ndarray, n: int) -> np.ndarray:
    return np.fft.irfft(spectrum * weights, n=n)


def normality_check(samples) -> NormalityCheck:
    """Skewness and excess kurtosis of estimator samples against Gaussian bounds."""
    samples = np.asarray(samples, dtype=float)
    skewness = float(stats.skew(samples))
    excess = float(stats.kurtosis(samples, fisher=True))
    passed = abs(skewness) < MAX_SKEWNESS and abs(excess) < MAX_EXCESS_KURTOSIS
    return NormalityCheck(skewness=skewness, excess_kurtosis=excess, samples=int(samples.size), passed=passed)


def _mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values)


def _std(values) -> float:
    values = list(values)
    mean = _mean(values)
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1))


def _empirical(peaks: List[float], noise: List[float]) -> Tuple[float, float, float]:
    """Empirical SNR, its standard error and the noise sigma."""
    sigma = _std(noise)
    snr = _mean(peaks) / sigma
    mean_error = _std(peaks) / math.sqrt(len(peaks)) / sigma
    sigma_error = snr / math.sqrt(2.0 * (len(noise) - 1))
    return snr, math.hypot(mean_error, sigma_error), sigma


def _run_trial(trial: int, spec: SimSpec, psd: np.ndarray, filters: Dict[str, np.ndarray]) -> Dict[str, TrialOutcome]:
    n = spec.n_samples
    rng = trial_rng(spec.seed, trial)
    noise = synthesize_noise(psd, spec, rng=rng)
    kick_index = n // 2 if spec.kick_time is KickTimePolicy.FIXED else int(rng.integers(n))

    kicked = noise.copy()
    kicked[kick_index] += spec.kick / spec.dt
    stride = max(n // spec.samples_per_trial, 1)
    sample_indices = [(kick_index + j * stride) % n for j in range(spec.samples_per_trial)]

    noise_spectrum = np.fft.rfft(noise)
    kicked_spectrum = np.fft.rfft(kicked)
    outcomes = {}
    for name, weights in filters.items():
        noise_only = _apply_filter(noise_spectrum, weights, n)
        estimator = _apply_filter(kicked_spectrum, weights, n)
        outcomes[name] = TrialOutcome(
            trial=trial,
            kick_index=kick_index,
            estimator_peak=float(estimator[kick_index]),
            noise_only_samples=tuple(float(noise_only[i]) for i in sample_indices),
        )
    return outcomes


def check_resolution(config: SensorConfig, spec: SimSpec) -> List[str]:
    """Reject grids that cannot resolve the resonance; return advisory warnings."""
    osc = config.oscillator
    f_m = osc.omega_m / (2.0 * math.pi)
    if spec.sample_rate <= MIN_SAMPLES_PER_PERIOD * f_m:
        raise ValidationError(f"must exceed {MIN_SAMPLES_PER_PERIOD:g} x omega_m/2pi = {MIN_SAMPLES_PER_PERIOD * f_m:.6g} Hz", field="sample_rate")

    warnings = []
    if osc.gamma > 0:
        recommended = RECOMMENDED_RINGDOWNS / (2.0 * math.pi * osc.gamma)
        if spec.duration < recommended:
            warnings.append(f"duration {spec.duration:.3g} s is shorter than the recommended {recommended:.3g} s for this damping")
    if spec.n_trials < MIN_TRIALS:
        warnings.append(f"{spec.n_trials} trials is below the {MIN_TRIALS} needed for reliable statistics")
    for message in warnings:
        logger.warning(message)
    return warnings


def matched_filter_snr(config: SensorConfig, spec: SimSpec, quad: Optional[QuadratureSpec] = None, workers: Optional[int] = None) -> SimulationSummary:
    """
    Run the Monte Carlo and compare the empirical SNR with the analytic one.

    The analytic reference integrates only over the band the grid represents.
    Trials are independent; with ``workers`` > 1 they run on a thread pool and
    results are gathered in trial order.
    """
    warnings = check_resolution(config, spec)

    psd = np.asarray(force_psd_value(config, frequency_grid(spec)), dtype=float)
    matched = matched_weights(psd)
    filters = {"matched": matched}
    filters.update(alternative_filters(spec, config.oscillator.omega_m))

    nu_lo, nu_hi = spec.band
    band_unit = band_limited_snr(config, 1.0, nu_lo, nu_hi, quad)
    full_unit = snr_optimal(config, 1.0, quad)
    if band_unit < BAND_WARNING_FRACTION * full_unit:
        message = f"simulated band [{nu_lo:.4g}, {nu_hi:.4g}] rad/s captures only {band_unit / full_unit:.1%} of the full-band SNR"
        logger.warning(message)
        warnings.append(message)

    logger.info(f"Running {spec.n_trials} trials of {spec.n_samples} samples (seed {spec.seed})")
    trials = range(spec.n_trials)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda t: _run_trial(t, spec, psd, filters), trials))
    else:
        results = [_run_trial(t, spec, psd, filters) for t in trials]

    comparisons = []
    summary_stats = {}
    for name, weights in filters.items():
        outcomes = [result[name] for result in results]
        peaks = [o.estimator_peak for o in outcomes]
        noise = [s for o in outcomes for s in o.noise_only_samples]
        snr, error, sigma = _empirical(peaks, noise)
        summary_stats[name] = (outcomes, snr, error, sigma, noise)
        comparisons.append(FilterComparison(name=name, expected_snr=expected_filter_snr(psd, weights, spec), empirical_snr=snr))

    outcomes, snr, error, sigma, noise = summary_stats["matched"]
    summary = SimulationSummary(
        spec=spec,
        outcomes=outcomes,
        empirical_snr=snr,
        standard_error=error,
        noise_sigma=sigma,
        expected_snr=expected_filter_snr(psd, matched, spec),
        band_limited_snr=spec.kick * band_unit,
        full_band_snr=spec.kick * full_unit,
        filters=comparisons,
        normality=normality_check(noise),
        warnings=warnings,
    )
    logger.info(f"Empirical SNR {summary.empirical_snr:.4f} +/- {summary.standard_error:.4f}, band-limited analytic {summary.band_limited_snr:.4f}")
    return summary


def band_limited_threshold(config: SensorConfig, spec: SimSpec, quad: Optional[QuadratureSpec] = None) -> float:
    """Kick size giving SNR = 1 when only the simulated band is used."""
    nu_lo, nu_hi = spec.band
    return 1.0 / band_limited_snr(config, 1.0, nu_lo, nu_hi, quad)
