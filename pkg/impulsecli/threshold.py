"""
Momentum-threshold engine for Impulse.

The impulse threshold is Delta p = I^{-1/2} with
I = integral over all nu of dnu / (2 pi S_FF(nu)) = (1/pi) integral_0^inf dnu / S_FF(nu).
The half line is mapped onto [0, 1) by nu = omega_m t / (1 - t) and split into
panels that straddle the mechanical resonance, each integrated adaptively.
"""

from dataclasses import dataclass, replace
from enum import Enum
import logging
import math
from typing import Callable, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, optimize

from .errors import InfinitePsdError, QuadratureError, SingularPointError, ValidationError
from .models import Cavity, SensorConfig, g_star, momentum_to_si, sql_threshold
from .spectra import force_psd_value

logger = logging.getLogger(__name__)

# Couplings within this fraction of the best threshold count as optimal
PLATEAU_TOLERANCE = 0.005

# Relative slack used when labelling a threshold against an analytic optimum
REGIME_TOLERANCE = 0.05

# Thresholds within this factor of Delta p_SQL / sqrt(Q) count as floor-limited
FLOOR_TOLERANCE = 0.15

# The high-Q laws need this much room between a threshold and the 1/sqrt(Q) floor
LOW_Q_WINDOW = 10.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy settings for the inverse-PSD integral."""

    rel_tol: float = 1e-9
    abs_tol: float = 0.0
    max_subdivisions: int = 200
    resonance_window: float = 50.0

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValidationError(f"must be > 0, got {self.rel_tol}", field="rel_tol")
        if self.abs_tol < 0:
            raise ValidationError(f"must be >= 0, got {self.abs_tol}", field="abs_tol")
        if int(self.max_subdivisions) < 1:
            raise ValidationError(f"must be >= 1, got {self.max_subdivisions}", field="max_subdivisions")
        if not self.resonance_window > 0:
            raise ValidationError(f"must be > 0, got {self.resonance_window}", field="resonance_window")
        object.__setattr__(self, "max_subdivisions", int(self.max_subdivisions))


class RegimeFlag(Enum):
    """Advisory labels attached to a threshold by comparison with analytic forms."""

    SQL_PLATEAU = "sql_plateau"
    SQUEEZING_LIMITED = "squeezing_limited"
    LOSS_LIMITED = "loss_limited"
    LOW_Q = "low_Q"


class TracePoint(NamedTuple):
    coupling: float
    delta_p: float


@dataclass(frozen=True)
class ThresholdResult:
    """Momentum threshold and the quadrature diagnostics behind it."""

    delta_p: float
    ratio_to_sql: float
    integral_value: float
    error_estimate: float
    evaluations: int
    coupling: float = math.nan
    regime_flags: FrozenSet[RegimeFlag] = frozenset()
    trace: Tuple[TracePoint, ...] = ()

    @property
    def delta_p_si(self) -> float:
        return momentum_to_si(self.delta_p)

    @property
    def flag_names(self) -> List[str]:
        return sorted(flag.value for flag in self.regime_flags)

    def with_flags(self, flags: Iterable[RegimeFlag]) -> "ThresholdResult":
        return replace(self, regime_flags=frozenset(flags))


class IntegralResult(NamedTuple):
    value: float
    error_estimate: float
    evaluations: int
    messages: Tuple[str, ...]


class CouplingOptimum(NamedTuple):
    coupling: float
    result: ThresholdResult


def resonance_breaks(omega_m: float, gamma: float, window: float) -> List[float]:
    """Frequencies at which the integration range must be split around the resonance."""
    offsets = {gamma, window * gamma}
    decade = 10.0 * gamma
    while decade < omega_m:
        offsets.add(decade)
        decade *= 10.0
    breaks = {omega_m}
    for offset in offsets:
        breaks.add(omega_m + offset)
        if offset < omega_m:
            breaks.add(omega_m - offset)
    return sorted(breaks)


def _readout_breaks(config: SensorConfig) -> Tuple[float, ...]:
    if isinstance(config.readout, Cavity):
        return (config.readout.kappa / 2.0,)
    return ()


def integrate_inverse_psd(
    psd: Callable[[float], float],
    omega_m: float,
    gamma: float,
    quad: Optional[QuadratureSpec] = None,
    extra_breaks: Sequence[float] = (),
    nu_lo: float = 0.0,
    nu_hi: float = math.inf,
) -> IntegralResult:
    """
    Compute (1/pi) * integral_{nu_lo}^{nu_hi} dnu / S(nu) for an even PSD.

    Args:
        psd: Callable returning S(nu) > 0 for nu >= 0
        omega_m: Resonance frequency, used for the substitution and panel breaks
        gamma: Resonance width; must be positive
        quad: Accuracy settings
        extra_breaks: Additional frequencies to split at (e.g. the cavity half-linewidth)
        nu_lo: Lower band edge
        nu_hi: Upper band edge (may be infinite)

    Returns:
        IntegralResult with value, error estimate, evaluation count and quad messages

    Raises:
        SingularPointError: if gamma is zero
        QuadratureError: if the combined error estimate misses the requested tolerance
    """
    if not gamma > 0:
        raise SingularPointError("inverse-PSD integral needs a damped oscillator (gamma > 0)")
    if not 0 <= nu_lo < nu_hi:
        raise ValidationError(f"invalid band [{nu_lo}, {nu_hi}]", field="band")
    quad = quad or QuadratureSpec()

    def to_t(nu: float) -> float:
        return 1.0 if math.isinf(nu) else nu / (nu + omega_m)

    def integrand(t: float) -> float:
        if t >= 1.0:
            return 0.0
        one_minus = 1.0 - t
        return omega_m / (one_minus * one_minus) / float(psd(omega_m * t / one_minus))

    breaks = list(resonance_breaks(omega_m, gamma, quad.resonance_window)) + list(extra_breaks)
    nodes = {to_t(nu_lo), to_t(nu_hi)}
    nodes.update(to_t(nu) for nu in breaks if nu_lo < nu < nu_hi)
    nodes = sorted(nodes)

    total = []
    errors = []
    evaluations = 0
    messages = []
    for a, b in zip(nodes[:-1], nodes[1:]):
        if b <= a:
            continue
        out = integrate.quad(integrand, a, b, epsabs=quad.abs_tol, epsrel=quad.rel_tol, limit=quad.max_subdivisions, full_output=1)
        value, error, info = out[0], out[1], out[2]
        total.append(value)
        errors.append(error)
        evaluations += int(info.get("neval", 0))
        if len(out) > 3:
            messages.append(f"panel [{a:.6g}, {b:.6g}]: {out[3]}")

    value = math.fsum(total) / math.pi
    error = math.fsum(errors) / math.pi

    if not math.isfinite(value) or value <= 0:
        raise QuadratureError("inverse-PSD integral is not a positive finite number", value=value, error_estimate=error, evaluations=evaluations, messages=messages)
    if error > max(quad.abs_tol, quad.rel_tol * value):
        raise QuadratureError(f"quadrature did not reach rel_tol={quad.rel_tol:g}", value=value, error_estimate=error, evaluations=evaluations, messages=messages)

    return IntegralResult(value=value, error_estimate=error, evaluations=evaluations, messages=tuple(messages))


def _threshold_integral(config: SensorConfig, quad: Optional[QuadratureSpec], nu_lo: float = 0.0, nu_hi: float = math.inf) -> IntegralResult:
    osc = config.oscillator
    if osc.gamma == 0:
        raise SingularPointError("momentum threshold requires gamma > 0 (finite Q)")
    if config.coupling == 0:
        raise InfinitePsdError("momentum threshold is infinite at zero coupling")
    return integrate_inverse_psd(
        lambda nu: force_psd_value(config, nu),
        osc.omega_m,
        osc.gamma,
        quad,
        extra_breaks=_readout_breaks(config),
        nu_lo=nu_lo,
        nu_hi=nu_hi,
    )


def momentum_threshold(config: SensorConfig, quad: Optional[QuadratureSpec] = None, classify: bool = True) -> ThresholdResult:
    """Minimum impulse resolvable at SNR = 1 with the optimal matched filter."""
    integral = _threshold_integral(config, quad)
    delta_p = integral.value**-0.5
    result = ThresholdResult(
        delta_p=delta_p,
        ratio_to_sql=delta_p / sql_threshold(config.oscillator),
        integral_value=integral.value,
        error_estimate=integral.error_estimate,
        evaluations=integral.evaluations,
        coupling=config.coupling,
    )
    logger.debug(f"Threshold at coupling {config.coupling:.6g}: ratio {result.ratio_to_sql:.6g} ({integral.evaluations} evaluations)")
    if classify:
        result = result.with_flags(classify_regimes(config, result))
    return result


def snr_optimal(config: SensorConfig, dp_sig: float, quad: Optional[QuadratureSpec] = None) -> float:
    """Matched-filter SNR for an impulse of size ``dp_sig``."""
    if not dp_sig > 0:
        raise ValidationError(f"must be > 0, got {dp_sig}", field="dp_sig")
    return dp_sig * math.sqrt(_threshold_integral(config, quad).value)


def band_limited_snr(config: SensorConfig, dp_sig: float, nu_lo: float, nu_hi: float, quad: Optional[QuadratureSpec] = None) -> float:
    """Matched-filter SNR using only frequencies in [nu_lo, nu_hi]."""
    if dp_sig < 0:
        raise ValidationError(f"must be >= 0, got {dp_sig}", field="dp_sig")
    return dp_sig * math.sqrt(_threshold_integral(config, quad, nu_lo=nu_lo, nu_hi=nu_hi).value)


def quartic_inverse_integral(quality_factor: float, a: float) -> float:
    """
    Closed form of integral_0^inf dx / [(x^2 - 1)^2 + x^2 / Q^2 + a^2].

    The denominator is x^4 + b x^2 + c with b = 1/Q^2 - 2 and c = 1 + a^2,
    whose inverse integrates by residues to pi / (2 sqrt(c) sqrt(b + 2 sqrt(c))).
    """
    if not quality_factor > 0:
        raise ValidationError(f"must be > 0, got {quality_factor}", field="quality_factor")
    root_c = math.sqrt(1.0 + a * a)
    # b + 2 sqrt(c) without the cancellation between -2 and 2 sqrt(1 + a^2)
    shifted = 1.0 / quality_factor**2 + 2.0 * a * a / (root_c + 1.0)
    return math.pi / (2.0 * root_c * math.sqrt(shifted))


def coupling_parameter(config: SensorConfig) -> float:
    """a = 2 g^2 / (m omega_m^2), with cavity couplings mapped to their slab equivalent."""
    osc = config.oscillator
    return 2.0 * config.readout.effective_coupling**2 / (osc.mass * osc.omega_m**2)


def coherent_threshold_ratio(quality_factor: float, a: float) -> float:
    """Exact lossless coherent Delta p / Delta p_SQL for a slab with coupling parameter ``a``."""
    if not a > 0:
        raise ValidationError(f"must be > 0, got {a}", field="a")
    return math.sqrt(math.pi / (2.0 * a * quartic_inverse_integral(quality_factor, a)))


def lossless_squeezed_ratio(g_tilde: float, r: float) -> float:
    """e^{-r} [(g~^4 + e^{4r}) / g~^4]^{1/4} with g~ = g / g_*."""
    return math.exp(-r) * ((g_tilde**4 + math.exp(4.0 * r)) / g_tilde**4) ** 0.25


def lossy_coherent_ratio(eta: float) -> float:
    return eta**-0.25


def small_eta_ratio(eta: float, r: float) -> float:
    """eta^{-1/4} e^{-r/2}, the strong-loss squeezing law."""
    return eta**-0.25 * math.exp(-r / 2.0)


def near_lossless_ratio(eta: float, r: float) -> float:
    """[1 + (1 - eta) e^{2r}]^{1/4} e^{-r}, first order in the loss."""
    return (1.0 + (1.0 - eta) * math.exp(2.0 * r)) ** 0.25 * math.exp(-r)


def lossy_squeezed_ratio(eta: float, r: float) -> float:
    """
    [e^{-2r} (e^{-2r} + (1 - eta)/eta)]^{1/4} at optimised coupling.

    Treats the lossy, optimally squeezed PSD as a coherent PSD with shot noise
    scaled by e^{-2r} + (1 - eta)/eta and back-action by e^{-2r}. It reduces to
    eta^{-1/4} without squeezing, e^{-r} without loss, and to the small-eta and
    near-lossless laws in their limits.
    """
    squeeze = math.exp(-2.0 * r)
    return (squeeze * (squeeze + (1.0 - eta) / eta)) ** 0.25


def floor_ratio(quality_factor: float) -> float:
    """1 / sqrt(Q), the squeezing floor."""
    return 1.0 / math.sqrt(quality_factor)


def is_low_q(quality_factor: float, r: float) -> bool:
    """True when the window g_* e^r << g << sqrt(Q) g_* does not exist."""
    return math.sqrt(quality_factor) < LOW_Q_WINDOW * math.exp(r)


def applicable_optimum(quality_factor: float, r: float, eta: float) -> float:
    """Best achievable Delta p / Delta p_SQL predicted for the given squeezing and loss."""
    return max(lossy_squeezed_ratio(eta, r), floor_ratio(quality_factor))


def classify_regimes(config: SensorConfig, result: ThresholdResult) -> FrozenSet[RegimeFlag]:
    """Label a threshold against the analytic optima; labels are advisory only."""
    q = config.oscillator.quality_factor
    r = config.squeezing.r
    eta = config.detection.eta
    ratio = result.ratio_to_sql
    flags = set()

    if ratio <= (1.0 + REGIME_TOLERANCE) * applicable_optimum(q, r, eta):
        flags.add(RegimeFlag.SQL_PLATEAU)
    if ratio <= (1.0 + FLOOR_TOLERANCE) * floor_ratio(q):
        flags.add(RegimeFlag.SQUEEZING_LIMITED)
    if eta < 1.0 and ratio > (1.0 + REGIME_TOLERANCE) * max(math.exp(-r), floor_ratio(q)):
        flags.add(RegimeFlag.LOSS_LIMITED)
    if ratio < LOW_Q_WINDOW * floor_ratio(q):
        flags.add(RegimeFlag.LOW_Q)
    return frozenset(flags)


def default_coupling_bounds(config: SensorConfig) -> Tuple[float, float]:
    """Search interval [0.1 g_*, 10 sqrt(Q) e^r eta^{-1/4} g_*] in the readout's native coupling."""
    osc = config.oscillator
    base = g_star(osc, config.readout)
    r = config.squeezing.r
    upper = 10.0 * math.sqrt(osc.quality_factor) * math.exp(r) * config.detection.eta**-0.25
    return 0.1 * base, upper * base


def optimize_coupling(
    config: SensorConfig,
    bounds: Optional[Tuple[float, float]] = None,
    quad: Optional[QuadratureSpec] = None,
    grid_points: int = 17,
) -> CouplingOptimum:
    """
    Find the coupling that minimises the momentum threshold.

    A logarithmic grid locates the basin, a bounded scalar search refines it, and
    the smallest coupling whose threshold lies within PLATEAU_TOLERANCE of the best
    is returned, since lower couplings mean lower laser power. If even the lower
    bound is on the plateau it is returned with the sql_plateau flag.
    """
    lo, hi = bounds or default_coupling_bounds(config)
    if not 0 < lo < hi:
        raise ValidationError(f"need 0 < g_lo < g_hi, got ({lo}, {hi})", field="bounds")
    if grid_points < 3:
        raise ValidationError(f"need at least 3 grid points, got {grid_points}", field="grid_points")

    cache = {}

    def evaluate(log_g: float) -> ThresholdResult:
        key = float(log_g)
        if key not in cache:
            cache[key] = momentum_threshold(config.with_coupling(math.exp(key)), quad, classify=False)
        return cache[key]

    def objective(log_g: float) -> float:
        return evaluate(log_g).delta_p

    grid = np.linspace(math.log(lo), math.log(hi), grid_points)
    values = [objective(x) for x in grid]
    best_index = int(np.argmin(values))

    left = grid[max(best_index - 1, 0)]
    right = grid[min(best_index + 1, grid_points - 1)]
    refined = optimize.minimize_scalar(objective, bounds=(left, right), method="bounded", options={"xatol": 1e-4})
    best_x = float(refined.x) if objective(refined.x) <= values[best_index] else float(grid[best_index])
    best = objective(best_x)

    target = best * (1.0 + PLATEAU_TOLERANCE)
    first = next(i for i, value in enumerate(values) if value <= target or i == best_index)
    plateau_edge = first == 0 and values[0] <= target
    if plateau_edge:
        chosen_x = float(grid[0])
    elif values[first] <= target:
        chosen_x = optimize.brentq(lambda x: objective(x) - target, grid[first - 1], grid[first], xtol=1e-6)
    else:
        # best lies between grid points and nothing on the grid reaches the target
        chosen_x = best_x

    chosen = evaluate(chosen_x)
    trace = tuple(TracePoint(math.exp(x), result.delta_p) for x, result in sorted(cache.items()))
    optimum_config = config.with_coupling(math.exp(chosen_x))
    flags = set(classify_regimes(optimum_config, chosen))
    if plateau_edge:
        flags.add(RegimeFlag.SQL_PLATEAU)
        logger.info(f"Threshold is flat down to the lower coupling bound {lo:.6g}")

    result = replace(chosen, coupling=math.exp(chosen_x), regime_flags=frozenset(flags), trace=trace)
    logger.info(f"Optimal coupling {result.coupling:.6g}: Delta p / Delta p_SQL = {result.ratio_to_sql:.6g} after {len(cache)} threshold evaluations")
    return CouplingOptimum(coupling=result.coupling, result=result)
