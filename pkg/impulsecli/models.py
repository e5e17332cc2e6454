"""
Core value types for Impulse.

Defines the oscillator, readout, squeezing and detection descriptions that every
other module consumes, together with the handful of closed-form quantities that
depend on them alone (SQL threshold, optimal coupling, power-coupling map).

Internal values use natural units (hbar = c = 1): masses in kg, rates in rad/s,
couplings g in sqrt(kg)/s and g_c in rad/s. SI is restored only by the helpers
at the bottom of this module.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
import logging
import math
from typing import Optional, Tuple, Union

from scipy import constants

from .errors import ValidationError

logger = logging.getLogger(__name__)

HBAR = constants.hbar
SPEED_OF_LIGHT = constants.c

# Relative tolerance for provenance round trips and Q/gamma consistency
CONSISTENCY_RTOL = 1e-9

# Above this k0*l the small-thickness coupling form is flagged as imprecise
SMALL_THICKNESS_LIMIT = 0.5


def _require_finite(name: str, value: float) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"expected a real number, got {value!r}", field=name)
    if not math.isfinite(value):
        raise ValidationError(f"must be finite, got {value}", field=name)
    return value


def _require_positive(name: str, value: float) -> float:
    value = _require_finite(name, value)
    if value <= 0:
        raise ValidationError(f"must be > 0, got {value}", field=name)
    return value


def _require_non_negative(name: str, value: float) -> float:
    value = _require_finite(name, value)
    if value < 0:
        raise ValidationError(f"must be >= 0, got {value}", field=name)
    return value


def normalize_angle(theta: float) -> float:
    """Map an angle onto (-pi, pi]."""
    wrapped = math.remainder(theta, 2 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2 * math.pi
    return wrapped


@dataclass(frozen=True)
class MechanicalOscillator:
    """Harmonically suspended test mass.

    The quality factor is always derived from ``gamma``; pass it through
    :meth:`from_quality_factor` instead of storing it.
    """

    mass: float
    omega_m: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "mass", _require_positive("mass", self.mass))
        object.__setattr__(self, "omega_m", _require_positive("omega_m", self.omega_m))
        object.__setattr__(self, "gamma", _require_non_negative("gamma", self.gamma))

    @classmethod
    def from_quality_factor(cls, mass: float, omega_m: float, quality_factor: float) -> "MechanicalOscillator":
        """Build an oscillator from Q = omega_m / gamma."""
        quality_factor = _require_positive("quality_factor", quality_factor)
        return cls(mass=mass, omega_m=omega_m, gamma=float(omega_m) / quality_factor)

    @property
    def quality_factor(self) -> float:
        if self.gamma == 0:
            return math.inf
        return self.omega_m / self.gamma


class CouplingForm(Enum):
    """Which slab coupling expression to evaluate."""

    SMALL_THICKNESS = "small"
    """Linearised sin(k0 l) ~ k0 l, valid for k0 l << 1."""

    FULL = "full"
    """Full sin(k0 l) dependence on the slab thickness."""


@dataclass(frozen=True)
class CouplingResult:
    """Slab coupling derived from laser power."""

    g: float
    form: CouplingForm
    warnings: Tuple[str, ...] = ()


def _thickness_factor(ell: float, omega_0: float, form: CouplingForm) -> float:
    k0_ell = ell * omega_0 / SPEED_OF_LIGHT
    if form is CouplingForm.SMALL_THICKNESS:
        return k0_ell
    return abs(math.sin(k0_ell))


def coupling_from_power(power: float, chi_e: float, ell: float, omega_0: float, form: CouplingForm = CouplingForm.FULL) -> CouplingResult:
    """
    Drive-enhanced slab coupling produced by a laser of the given power.

    g = sqrt(omega_0 P) / c * chi_e * sin(k0 l) / (2 pi), with k0 = omega_0 / c;
    the small-thickness form replaces sin(k0 l) by k0 l.

    Args:
        power: Laser power in W (zero drive gives zero coupling)
        chi_e: Electric susceptibility of the slab
        ell: Slab thickness in m
        omega_0: Laser angular frequency in rad/s
        form: Small-thickness or full expression

    Returns:
        CouplingResult with g in sqrt(kg)/s and any precision warnings
    """
    power = _require_non_negative("power", power)
    chi_e = _require_positive("chi_e", chi_e)
    ell = _require_positive("ell", ell)
    omega_0 = _require_positive("omega_0", omega_0)
    form = CouplingForm(form)

    warnings = []
    k0_ell = ell * omega_0 / SPEED_OF_LIGHT
    if form is CouplingForm.SMALL_THICKNESS and k0_ell > SMALL_THICKNESS_LIMIT:
        message = f"small-thickness coupling used with k0*l = {k0_ell:.3g} > {SMALL_THICKNESS_LIMIT}; prefer the full form"
        logger.warning(message)
        warnings.append(message)

    g = math.sqrt(omega_0 * power) / SPEED_OF_LIGHT * chi_e * _thickness_factor(ell, omega_0, form) / (2 * math.pi)
    return CouplingResult(g=g, form=form, warnings=tuple(warnings))


def power_for_coupling(g: float, chi_e: float, ell: float, omega_0: float, form: CouplingForm = CouplingForm.FULL) -> float:
    """Laser power in W needed for slab coupling ``g`` (inverse of coupling_from_power)."""
    g = _require_non_negative("g", g)
    chi_e = _require_positive("chi_e", chi_e)
    ell = _require_positive("ell", ell)
    omega_0 = _require_positive("omega_0", omega_0)
    factor = _thickness_factor(ell, omega_0, CouplingForm(form))
    if factor == 0:
        raise ValidationError("slab thickness is a node of sin(k0 l); no power produces a coupling", field="ell")
    amplitude = g * 2 * math.pi * SPEED_OF_LIGHT / (chi_e * factor)
    return amplitude**2 / omega_0


def laser_angular_frequency(wavelength: float) -> float:
    """omega_0 = 2 pi c / lambda for a wavelength in m."""
    wavelength = _require_positive("wavelength", wavelength)
    return 2 * math.pi * SPEED_OF_LIGHT / wavelength


@dataclass(frozen=True)
class SlabProvenance:
    """How a slab coupling was obtained from laboratory parameters."""

    chi_e: float
    ell: float
    omega_0: float
    power: float
    form: CouplingForm = CouplingForm.FULL

    def coupling(self) -> float:
        return coupling_from_power(self.power, self.chi_e, self.ell, self.omega_0, self.form).g


@dataclass(frozen=True)
class Cavity:
    """Fabry-Perot cavity readout at zero detuning."""

    kappa: float
    g_c: float

    def __post_init__(self):
        object.__setattr__(self, "kappa", _require_positive("kappa", self.kappa))
        object.__setattr__(self, "g_c", _require_non_negative("g_c", self.g_c))

    @property
    def coupling(self) -> float:
        return self.g_c

    @property
    def effective_coupling(self) -> float:
        """Slab-equivalent coupling in the bad-cavity limit, g^2 = 4 g_c^2 / kappa."""
        return math.sqrt(4 * self.g_c**2 / self.kappa)

    def with_coupling(self, value: float) -> "Cavity":
        return replace(self, g_c=value)


@dataclass(frozen=True)
class Slab:
    """Suspended dielectric slab read out by its back-scattered light."""

    g: float
    provenance: Optional[SlabProvenance] = None

    def __post_init__(self):
        object.__setattr__(self, "g", _require_non_negative("g", self.g))
        if self.provenance is not None:
            expected = self.provenance.coupling()
            if not math.isclose(self.g, expected, rel_tol=CONSISTENCY_RTOL, abs_tol=0.0):
                raise ValidationError(f"coupling {self.g} does not match {expected} derived from laser power", field="g")

    @classmethod
    def from_power(cls, power: float, chi_e: float, ell: float, omega_0: float, form: CouplingForm = CouplingForm.FULL) -> "Slab":
        provenance = SlabProvenance(chi_e=chi_e, ell=ell, omega_0=omega_0, power=power, form=CouplingForm(form))
        return cls(g=provenance.coupling(), provenance=provenance)

    @property
    def coupling(self) -> float:
        return self.g

    @property
    def effective_coupling(self) -> float:
        return self.g

    def with_coupling(self, value: float) -> "Slab":
        # A directly specified coupling no longer derives from the recorded power
        return Slab(g=value)


Readout = Union[Cavity, Slab]


@dataclass(frozen=True)
class NoSqueezing:
    """Coherent (vacuum) input light."""

    @property
    def r(self) -> float:
        return 0.0


@dataclass(frozen=True)
class FixedAngle:
    """Frequency-independent squeezing at a fixed quadrature angle."""

    r: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "r", _require_non_negative("r", self.r))
        object.__setattr__(self, "theta", normalize_angle(_require_finite("theta", self.theta)))


@dataclass(frozen=True)
class OptimalAngle:
    """Frequency-dependent squeezing rotated to the optimal angle at every frequency."""

    r: float

    def __post_init__(self):
        object.__setattr__(self, "r", _require_non_negative("r", self.r))


SqueezingPolicy = Union[NoSqueezing, FixedAngle, OptimalAngle]


def squeezing_db(r: float) -> float:
    """Shot-noise power reduction in dB, 10 log10(e^{2r})."""
    r = _require_non_negative("r", r)
    return 20.0 * r / math.log(10.0)


def r_from_db(db: float) -> float:
    """Inverse of :func:`squeezing_db`."""
    db = _require_non_negative("dB", db)
    return db * math.log(10.0) / 20.0


@dataclass(frozen=True)
class DetectionChain:
    """Photodetection with efficiency eta; eta = 1 is lossless."""

    eta: float = 1.0

    def __post_init__(self):
        eta = _require_finite("eta", self.eta)
        if not 0 < eta <= 1:
            raise ValidationError(f"must lie in (0, 1], got {eta}", field="eta")
        object.__setattr__(self, "eta", eta)

    @property
    def is_lossless(self) -> bool:
        return self.eta == 1.0

    @property
    def added_vacuum(self) -> float:
        """PSD of the vacuum admitted by the loss beamsplitter."""
        return 0.5


@dataclass(frozen=True)
class SensorConfig:
    """A fully specified sensor: oscillator, readout, input light and detector."""

    oscillator: MechanicalOscillator
    readout: Readout
    squeezing: SqueezingPolicy = field(default_factory=NoSqueezing)
    detection: DetectionChain = field(default_factory=DetectionChain)

    def __post_init__(self):
        if not isinstance(self.oscillator, MechanicalOscillator):
            raise ValidationError(f"expected MechanicalOscillator, got {type(self.oscillator).__name__}", field="oscillator")
        if not isinstance(self.readout, (Cavity, Slab)):
            raise ValidationError(f"expected Cavity or Slab, got {type(self.readout).__name__}", field="readout")
        if not isinstance(self.squeezing, (NoSqueezing, FixedAngle, OptimalAngle)):
            raise ValidationError(f"expected a squeezing policy, got {type(self.squeezing).__name__}", field="squeezing")
        if not isinstance(self.detection, DetectionChain):
            raise ValidationError(f"expected DetectionChain, got {type(self.detection).__name__}", field="detection")

    @property
    def coupling(self) -> float:
        """Native coupling of the readout (g for a slab, g_c for a cavity)."""
        return self.readout.coupling

    def with_coupling(self, value: float) -> "SensorConfig":
        return replace(self, readout=self.readout.with_coupling(value))

    def with_squeezing(self, policy: SqueezingPolicy) -> "SensorConfig":
        return replace(self, squeezing=policy)

    def with_detection(self, eta: float) -> "SensorConfig":
        return replace(self, detection=DetectionChain(eta))


def sql_threshold(osc: MechanicalOscillator) -> float:
    """Impulse Standard Quantum Limit sqrt(m omega_m) in natural units."""
    return math.sqrt(osc.mass * osc.omega_m)


def sql_threshold_si(osc: MechanicalOscillator) -> float:
    """Impulse Standard Quantum Limit sqrt(hbar m omega_m) in kg m/s."""
    return math.sqrt(HBAR * osc.mass * osc.omega_m)


def momentum_to_si(delta_p: float) -> float:
    """Convert a natural-unit momentum threshold to kg m/s."""
    return delta_p * math.sqrt(HBAR)


def momentum_from_si(delta_p_si: float) -> float:
    return delta_p_si / math.sqrt(HBAR)


def psd_to_si(s_ff: float) -> float:
    """Convert a natural-unit force PSD to N^2 s (per unit angular frequency)."""
    return s_ff * HBAR


def g_star(osc: MechanicalOscillator, readout: Optional[Readout] = None, r: float = 0.0) -> float:
    """
    Coupling that minimises the on-resonance force PSD.

    For a slab g_* = sqrt(m gamma omega_m / 2). For a cavity the bad-cavity map
    4 g_c^2 / kappa = g^2 gives g_c = sqrt(kappa m gamma omega_m / 8). With
    optimal squeezing of strength r the coupling grows as e^{r}.
    """
    if osc.gamma == 0:
        raise ValidationError("undamped oscillator has no finite on-resonance optimum", field="gamma")
    r = _require_non_negative("r", r)
    g2 = osc.mass * osc.gamma * osc.omega_m / 2.0 * math.exp(2 * r)
    if isinstance(readout, Cavity):
        return math.sqrt(readout.kappa * g2 / 4.0)
    return math.sqrt(g2)


def r_max(osc: MechanicalOscillator) -> float:
    """Squeezing beyond which the high-Q expansion fails, 1/2 ln Q."""
    return 0.5 * math.log(osc.quality_factor)


def min_threshold_ratio(osc: MechanicalOscillator) -> float:
    """Floor of Delta p / Delta p_SQL reachable with any squeezing, 1/sqrt(Q)."""
    return 1.0 / math.sqrt(osc.quality_factor)
