"""
Input quadrature spectra and the force-referred noise PSD.

PSDs follow the symmetric convention in which vacuum quadrature noise is 1/2
and are expressed per unit angular frequency in natural units.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging
import math
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .errors import InfinitePsdError, ValidationError
from .models import Cavity, DetectionChain, FixedAngle, NoSqueezing, OptimalAngle, SensorConfig, SqueezingPolicy, g_star
from .response import Frequency, mechanical_susceptibility, optimal_angle, quadrature_weights, transfer_functions

logger = logging.getLogger(__name__)

VACUUM_NOISE = 0.5


@dataclass(frozen=True)
class InputNoise:
    """Quadrature PSDs of the light entering the sensor at one frequency."""

    s_xx: float
    s_yy: float
    s_xy: float

    @property
    def uncertainty_product(self) -> float:
        """S_XX S_YY - S_XY^2, equal to 1/4 for a pure squeezed state."""
        return self.s_xx * self.s_yy - self.s_xy**2


@dataclass(frozen=True)
class PsdBreakdown:
    shot: float
    backaction: float
    cross: float
    loss: float
    thermal: float = 0.0

    @property
    def total(self) -> float:
        return math.fsum((self.shot, self.backaction, self.cross, self.loss, self.thermal))


@dataclass(frozen=True)
class ForcePsdPoint:
    """Force PSD at one angular frequency with its term-by-term decomposition."""

    nu: float
    s_ff: float
    breakdown: PsdBreakdown


def _squeezed_quadratures(r, theta):
    cosh2r = np.cosh(2.0 * r)
    sinh2r = np.sinh(2.0 * r)
    s_xx = 0.5 * (cosh2r - np.cos(theta) * sinh2r)
    s_yy = 0.5 * (cosh2r + np.cos(theta) * sinh2r)
    s_xy = -0.5 * np.sin(theta) * sinh2r
    return s_xx, s_yy, s_xy


def input_noise(policy: SqueezingPolicy, theta_resolved: float) -> InputNoise:
    """
    Quadrature noise of squeezed vacuum with strength ``policy.r`` at angle ``theta_resolved``.

    NoSqueezing gives vacuum regardless of the angle.
    """
    if isinstance(policy, NoSqueezing):
        return InputNoise(VACUUM_NOISE, VACUUM_NOISE, 0.0)
    s_xx, s_yy, s_xy = _squeezed_quadratures(policy.r, theta_resolved)
    return InputNoise(float(s_xx), float(s_yy), float(s_xy))


def resolve_angle(config: SensorConfig, nu: Frequency):
    """Concrete squeezing angle used at ``nu`` for the configured policy."""
    policy = config.squeezing
    if isinstance(policy, FixedAngle):
        return policy.theta
    if isinstance(policy, OptimalAngle):
        return optimal_angle(config, nu)
    return 0.0


def _require_coupling(config: SensorConfig) -> None:
    if config.coupling == 0:
        raise InfinitePsdError("force PSD is infinite at zero coupling: the output carries no force information")


def _loss_term(detection: DetectionChain, chi_yf_sq):
    return (1.0 - detection.eta) / detection.eta * detection.added_vacuum / chi_yf_sq


def force_psd(config: SensorConfig, nu: float) -> ForcePsdPoint:
    """
    Force-referred PSD S_FF(nu) with its shot, back-action, cross and loss terms.

    S_FF = [|chi_YY|^2 S_YY + |chi_YX|^2 S_XX + 2 Re(chi_YX chi_YY*) S_XY] / |chi_YF|^2
           + (1 - eta) / (2 eta |chi_YF|^2)
    """
    _require_coupling(config)
    nu = float(nu)
    triple = transfer_functions(config, nu)
    a, b, c = quadrature_weights(triple)
    chi_yf_sq = abs(triple.chi_yf) ** 2

    noise = input_noise(config.squeezing, resolve_angle(config, nu))
    breakdown = PsdBreakdown(
        shot=a * noise.s_yy / chi_yf_sq,
        backaction=b * noise.s_xx / chi_yf_sq,
        cross=2.0 * c * noise.s_xy / chi_yf_sq,
        loss=_loss_term(config.detection, chi_yf_sq),
    )
    return ForcePsdPoint(nu=nu, s_ff=breakdown.total, breakdown=breakdown)


def optimal_psd(config: SensorConfig, nu: Frequency):
    """
    Closed-form PSD at the optimal angle for squeezing strength ``config.squeezing.r``.

    1/(2|chi_YF|^2) [(|chi_YX|^2 + |chi_YY|^2) cosh 2r - |chi_YX^2 + chi_YY^2| sinh 2r] plus the loss term.

    With M = |chi_YX|^2 + |chi_YY|^2 and S = |chi_YX^2 + chi_YY^2| the bracket is
    evaluated as (M - S) e^{2r} / 2 + (M + S) e^{-2r} / 2, where
    M - S = 4 Im(chi_YX chi_YY*)^2 / (M + S) carries no cancellation at large r.
    """
    _require_coupling(config)
    triple = transfer_functions(config, nu)
    r = config.squeezing.r
    chi_yf_sq = abs(triple.chi_yf) ** 2
    modulus_sum = abs(triple.chi_yx) ** 2 + abs(triple.chi_yy) ** 2
    sum_modulus = abs(triple.chi_yx**2 + triple.chi_yy**2)
    both = modulus_sum + sum_modulus
    unsqueezable = 4.0 * np.imag(triple.chi_yx * np.conj(triple.chi_yy)) ** 2 / both
    lossless = (unsqueezable * math.exp(2.0 * r) + both * math.exp(-2.0 * r)) / (4.0 * chi_yf_sq)
    return lossless + _loss_term(config.detection, chi_yf_sq)


def force_psd_value(config: SensorConfig, nu: Frequency):
    """Total S_FF only; accepts scalars or arrays and is the integrand kernel for thresholds."""
    _require_coupling(config)
    if isinstance(config.squeezing, OptimalAngle):
        return optimal_psd(config, nu)

    triple = transfer_functions(config, nu)
    a, b, c = quadrature_weights(triple)
    chi_yf_sq = abs(triple.chi_yf) ** 2
    if isinstance(config.squeezing, FixedAngle):
        s_xx, s_yy, s_xy = _squeezed_quadratures(config.squeezing.r, config.squeezing.theta)
    else:
        s_xx, s_yy, s_xy = VACUUM_NOISE, VACUUM_NOISE, 0.0
    return (a * s_yy + b * s_xx + 2.0 * c * s_xy) / chi_yf_sq + _loss_term(config.detection, chi_yf_sq)


def coherent_psd(config: SensorConfig, nu: Frequency):
    """
    Coherent-light PSD in closed form, including detection loss.

    Slab:   m^2 [(nu^2 - omega_m^2)^2 + gamma^2 nu^2] / (4 eta g^2) + g^2
    Cavity: the same with g^2 replaced by kappa g_c^2 |chi_c|^2, which tends to
            4 g_c^2 / kappa for a bad cavity.
    """
    _require_coupling(config)
    osc = config.oscillator
    readout = config.readout
    inverse_response = osc.mass**2 * ((nu * nu - osc.omega_m**2) ** 2 + (osc.gamma * nu) ** 2)
    if isinstance(readout, Cavity):
        g_sq = readout.kappa * readout.g_c**2 / (nu * nu + readout.kappa**2 / 4.0)
    else:
        g_sq = readout.g**2
    return inverse_response / (4.0 * config.detection.eta * g_sq) + g_sq


def lossy_squeezed_psd(config: SensorConfig, nu: Frequency):
    """Approximate lossy PSD with optimal squeezing: e^{-2r} times the lossless coherent PSD plus the loss term."""
    _require_coupling(config)
    lossless = coherent_psd(config.with_detection(1.0), nu)
    chi_yf_sq = abs(transfer_functions(config, nu).chi_yf) ** 2
    return math.exp(-2.0 * config.squeezing.r) * lossless + _loss_term(config.detection, chi_yf_sq)


def small_eta_psd(config: SensorConfig, nu: Frequency):
    """Leading form for strong loss: [1/eta + e^{-2r} |chi_YX|^2] / (2 |chi_YF|^2)."""
    _require_coupling(config)
    triple = transfer_functions(config, nu)
    r = config.squeezing.r
    numerator = 1.0 / config.detection.eta + math.exp(-2.0 * r) * abs(triple.chi_yx) ** 2
    return numerator / (2.0 * abs(triple.chi_yf) ** 2)


def asymptotic_psd(config: SensorConfig, nu: Frequency):
    """
    Large-coupling, high-Q expansion of the optimally squeezed PSD.

    e^{-2r} m omega_m^2 g~^2 / (2Q) + e^{-2r} m [e^{4r} nu^2 + Q^2 (nu^2 - omega_m^2)^2 / omega_m^2] / (2Q g~^2)
    with g~ = g / g_*. Cavity couplings enter through their bad-cavity slab equivalent.
    """
    if isinstance(config.squeezing, FixedAngle):
        raise ValidationError("expansion holds for optimal-angle or coherent light only", field="squeezing")
    _require_coupling(config)
    osc = config.oscillator
    r = config.squeezing.r
    q = osc.quality_factor
    g_tilde_sq = (config.readout.effective_coupling / g_star(osc)) ** 2
    first = math.exp(-2.0 * r) * osc.mass * osc.omega_m**2 * g_tilde_sq / (2.0 * q)
    bracket = math.exp(4.0 * r) * nu * nu + q**2 * (nu * nu - osc.omega_m**2) ** 2 / osc.omega_m**2
    second = math.exp(-2.0 * r) * osc.mass * bracket / (2.0 * q * g_tilde_sq)
    return first + second


class RescalingCheck(NamedTuple):
    lhs: float
    rhs: float


def lossy_coherent_rescaling_check(config: SensorConfig, nu: float) -> RescalingCheck:
    """
    Both sides of S_FF(nu; eta, g) = eta^{-1/2} S_FF(nu; 1, eta^{1/4} g) for coherent light.

    Loss acts on coherent light purely as a rescaling of the coupling, so the
    optimal lossy coupling is eta^{-1/4} g_*.
    """
    if not isinstance(config.squeezing, NoSqueezing):
        raise ValidationError("rescaling identity holds for coherent light only", field="squeezing")
    eta = config.detection.eta
    lhs = force_psd(config, nu).s_ff
    lossless = config.with_detection(1.0).with_coupling(config.coupling * eta**0.25)
    rhs = eta**-0.5 * force_psd(lossless, nu).s_ff
    return RescalingCheck(lhs=lhs, rhs=rhs)


def exact_on_resonance_coupling(config: SensorConfig) -> float:
    """
    Native coupling minimising S_FF(omega_m) exactly, including loss and finite kappa.

    With input noise (S_XX, S_YY) on resonance, g^2 = g_*^2 sqrt([S_YY + (1 - eta)/(2 eta)] / S_XX).
    Optimal-angle squeezing takes the branch with anti-squeezed shot noise, matching
    g_*^2 e^{2r} when lossless. A cavity maps g^2 to kappa g_c^2 |chi_c(omega_m)|^2.
    """
    osc = config.oscillator
    policy = config.squeezing
    if isinstance(policy, OptimalAngle):
        noise = input_noise(FixedAngle(policy.r, 0.0), 0.0)
    else:
        noise = input_noise(policy, resolve_angle(config, osc.omega_m))
    eta = config.detection.eta
    shot_side = noise.s_yy + (1.0 - eta) / eta * config.detection.added_vacuum
    g_sq = g_star(osc) ** 2 * math.sqrt(shot_side / noise.s_xx)

    readout = config.readout
    if isinstance(readout, Cavity):
        return math.sqrt(g_sq * (osc.omega_m**2 + readout.kappa**2 / 4.0) / readout.kappa)
    return math.sqrt(g_sq)


def on_resonance_bound(config: SensorConfig) -> float:
    """m gamma omega_m, the smallest S_FF(omega_m) reachable with any squeezing."""
    osc = config.oscillator
    return 1.0 / abs(mechanical_susceptibility(osc, osc.omega_m))


def psd_grid(config: SensorConfig, nus: Sequence[float], workers: Optional[int] = None) -> List[ForcePsdPoint]:
    """Evaluate :func:`force_psd` over a frequency grid, preserving input order."""
    nus = [float(nu) for nu in nus]
    if workers and workers > 1 and len(nus) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(lambda nu: force_psd(config, nu), nus))
    else:
        points = [force_psd(config, nu) for nu in nus]
    logger.debug(f"Evaluated force PSD at {len(points)} frequencies")
    return points
