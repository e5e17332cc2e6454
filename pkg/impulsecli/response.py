"""
Susceptibilities and input-output transfer functions.

All functions accept a scalar angular frequency or a numpy array of them and
return a value of the same shape. The mechanical susceptibility uses the
+i gamma nu sign convention; only the sign of Im chi_m (and hence of the
optimal squeezing angle) depends on that choice.
"""

import logging
import math
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import SingularPointError, UndefinedAngleError, ValidationError
from .models import Cavity, MechanicalOscillator, SensorConfig, normalize_angle

logger = logging.getLogger(__name__)

Frequency = Union[float, np.ndarray]


class TransferTriple(NamedTuple):
    """Output phase response to input shot noise, back-action and force."""

    chi_yy: complex
    chi_yx: complex
    chi_yf: complex


def mechanical_susceptibility(osc: MechanicalOscillator, nu: Frequency):
    """chi_m(nu) = 1 / [m (omega_m^2 - nu^2 + i gamma nu)]."""
    if osc.gamma == 0 and np.any(np.abs(nu) == osc.omega_m):
        raise SingularPointError(f"undamped oscillator response diverges at nu = omega_m = {osc.omega_m}")
    return 1.0 / (osc.mass * (osc.omega_m**2 - nu * nu + 1j * osc.gamma * nu))


def cavity_susceptibility(kappa: float, nu: Frequency):
    """chi_c(nu) = 1 / (i nu - kappa / 2)."""
    if kappa <= 0:
        raise ValidationError(f"must be > 0, got {kappa}", field="kappa")
    return 1.0 / (1j * nu - kappa / 2.0)


def transfer_functions(config: SensorConfig, nu: Frequency) -> TransferTriple:
    """
    Evaluate (chi_YY, chi_YX, chi_YF) for the configured readout.

    Cavity at zero detuning:
        chi_YY = 1 + kappa chi_c
        chi_YX = -2 kappa g_c^2 chi_c^2 chi_m
        chi_YF = -sqrt(2 kappa) g_c chi_c chi_m
    Slab:
        chi_YY = 1, chi_YX = -2 g^2 chi_m, chi_YF = sqrt(2) g chi_m
    """
    chi_m = mechanical_susceptibility(config.oscillator, nu)
    readout = config.readout

    if isinstance(readout, Cavity):
        chi_c = cavity_susceptibility(readout.kappa, nu)
        chi_yy = 1.0 + readout.kappa * chi_c
        chi_yx = -2.0 * readout.kappa * readout.g_c**2 * chi_c * chi_c * chi_m
        chi_yf = -math.sqrt(2.0 * readout.kappa) * readout.g_c * chi_c * chi_m
        return TransferTriple(chi_yy, chi_yx, chi_yf)

    g = readout.g
    chi_yy = np.ones_like(chi_m) if isinstance(chi_m, np.ndarray) else 1.0 + 0.0j
    return TransferTriple(chi_yy, -2.0 * g * g * chi_m, math.sqrt(2.0) * g * chi_m)


def quadrature_weights(triple: TransferTriple):
    """
    Coefficients (A, B, C) of the output phase PSD.

    A = |chi_YY|^2 multiplies S_YY, B = |chi_YX|^2 multiplies S_XX and
    2C = 2 Re(chi_YX chi_YY*) multiplies S_XY.
    """
    a = abs(triple.chi_yy) ** 2
    b = abs(triple.chi_yx) ** 2
    c = (triple.chi_yx * triple.chi_yy.conjugate()).real
    return a, b, c


def optimal_angle(config: SensorConfig, nu: Frequency):
    """
    Squeezing angle minimising S_FF at frequency ``nu``.

    tan(theta) = 2 Re[chi_YX chi_YY*] / (|chi_YX|^2 - |chi_YY|^2) has two
    solutions per period; both are formed with atan2 and the one giving the
    smaller quadrature noise is returned, normalised to (-pi, pi]. The result
    is independent of r and of the detection efficiency.
    """
    if config.coupling == 0:
        raise UndefinedAngleError("optimal squeezing angle is undefined without back-action (zero coupling)")

    a, b, c = quadrature_weights(transfer_functions(config, nu))
    first = np.arctan2(2.0 * c, b - a)
    second = first + np.pi

    # S_FF(theta) - const is proportional to (A - B) cos(theta) - 2 C sin(theta)
    def excess(theta):
        return (a - b) * np.cos(theta) - 2.0 * c * np.sin(theta)

    chosen = np.where(excess(second) < excess(first), second, first)
    if np.ndim(chosen) == 0:
        return normalize_angle(float(chosen))
    return np.vectorize(normalize_angle, otypes=[float])(chosen)


def optimal_angle_grid(config: SensorConfig, nus: Sequence[float], unwrap: bool = True) -> np.ndarray:
    """Optimal angles over a frequency sweep, optionally unwrapped for plotting."""
    nus = np.asarray(nus, dtype=float)
    angles = np.atleast_1d(optimal_angle(config, nus))
    if unwrap and angles.size > 1:
        return np.unwrap(angles)
    return angles


def bad_cavity_half_angle(config: SensorConfig, nu: Frequency):
    """
    tan(theta*/2) for an undamped oscillator in a bad cavity.

    Returns m kappa (omega_m^2 - nu^2) / (8 g_c^2). The exact finite-kappa
    value replaces kappa^2/4 by nu^2 + kappa^2/4.
    """
    readout = config.readout
    if not isinstance(readout, Cavity):
        raise ValidationError("half-angle closed form applies to cavity readout only", field="readout")
    if readout.g_c == 0:
        raise UndefinedAngleError("optimal squeezing angle is undefined without back-action (zero coupling)")
    osc = config.oscillator
    return osc.mass * readout.kappa * (osc.omega_m**2 - nu * nu) / (8.0 * readout.g_c**2)
