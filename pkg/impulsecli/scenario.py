"""
Scenario files for Impulse.

A scenario is a YAML document with the sections ``system``, ``drive``,
``squeezing``, ``detection`` and the optional ``sweep``, ``simulation`` and
``verify``. Every dimensional value carries a unit suffix; "100 kHz" is an
ordinary frequency and is stored as the angular frequency 2 pi x 1e5 rad/s.
Parsed scenarios hold SI values (natural units for couplings and kicks) and
serialise back to canonical units, so parse -> serialise -> parse is stable.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
import logging
import math
from pathlib import Path
import re
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

from .errors import ConfigError, ValidationError
from .models import (
    Cavity,
    CouplingForm,
    DetectionChain,
    FixedAngle,
    MechanicalOscillator,
    NoSqueezing,
    OptimalAngle,
    Readout,
    SensorConfig,
    Slab,
    SqueezingPolicy,
    g_star,
    laser_angular_frequency,
    momentum_from_si,
    r_from_db,
    squeezing_db,
)
from .scaling import DEFAULT_R_GRID
from .simulate import KickTimePolicy, SimSpec

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

UNITS: Dict[str, Dict[str, float]] = {
    "frequency": {
        "Hz": TWO_PI,
        "kHz": TWO_PI * 1e3,
        "MHz": TWO_PI * 1e6,
        "GHz": TWO_PI * 1e9,
        "rad/s": 1.0,
        "krad/s": 1e3,
        "Mrad/s": 1e6,
        "Grad/s": 1e9,
    },
    # Sample rates count samples per second, not radians
    "rate": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "mass": {"kg": 1.0, "g": 1e-3, "mg": 1e-6, "ug": 1e-9, "ng": 1e-12, "pg": 1e-15, "fg": 1e-18, "ag": 1e-21},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9, "pm": 1e-12},
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "nW": 1e-9, "pW": 1e-12},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S.*?)?\s*$")

G_STAR_UNIT = "g*"
THRESHOLD_UNIT = "threshold"
SI_MOMENTUM_UNIT = "kg m/s"


class ReadoutKind(Enum):
    SLAB = "slab"
    CAVITY = "cavity"


class SqueezingMode(Enum):
    NONE = "none"
    FIXED = "fixed"
    OPTIMAL = "optimal"


class SweepVariable(Enum):
    NU = "nu"
    POWER = "power"
    G = "g"
    R = "r"
    ETA = "eta"


class SweepScale(Enum):
    LINEAR = "linear"
    LOG = "log"


def _split_quantity(value: Any, field_path: str) -> Tuple[float, Optional[str]]:
    if isinstance(value, bool) or value is None:
        raise ConfigError(f"expected a number, got {value!r}", field=field_path)
    if isinstance(value, (int, float)):
        return float(value), None
    if not isinstance(value, str):
        raise ConfigError(f"expected a number or a quantity string, got {type(value).__name__}", field=field_path)
    match = _QUANTITY.match(value.replace("µ", "u").replace("μ", "u"))
    if not match:
        raise ConfigError(f"cannot parse {value!r} as a quantity", field=field_path)
    return float(match.group(1)), match.group(2)


def parse_quantity(value: Any, dimension: str, field_path: str, allow_plain: bool = False) -> float:
    """
    Convert ``value`` to the SI (angular for frequencies) number it denotes.

    Raises ConfigError naming ``field_path`` for missing or unknown units.
    """
    number, unit = _split_quantity(value, field_path)
    factors = UNITS[dimension]
    if unit is None:
        if allow_plain:
            return number
        raise ConfigError(f"missing unit; expected one of {', '.join(factors)}", field=field_path)
    if unit not in factors:
        raise ConfigError(f"unknown {dimension} unit {unit!r}; expected one of {', '.join(factors)}", field=field_path)
    return number * factors[unit]


def _plain(value: Any, field_path: str) -> float:
    number, unit = _split_quantity(value, field_path)
    if unit is not None:
        raise ConfigError(f"dimensionless value must not carry a unit, got {unit!r}", field=field_path)
    if not math.isfinite(number):
        raise ConfigError(f"must be finite, got {number}", field=field_path)
    return number


def _integer(value: Any, field_path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", field=field_path)
    return value


def _enum(enum_cls, value: Any, field_path: str):
    try:
        return enum_cls(value)
    except ValueError:
        choices = ", ".join(member.value for member in enum_cls)
        raise ConfigError(f"expected one of {choices}, got {value!r}", field=field_path)


def _section(raw: Dict[str, Any], name: str, allowed: Tuple[str, ...], required: bool = True) -> Dict[str, Any]:
    section = raw.get(name)
    if section is None:
        if required:
            raise ConfigError("missing required section", field=name)
        return {}
    if not isinstance(section, dict):
        raise ConfigError("section must be a mapping", field=name)
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(map(str, unknown))}", field=f"{name}.{unknown[0]}")
    return section


def _exactly_one(section: Dict[str, Any], name: str, keys: Tuple[str, ...]) -> str:
    present = [key for key in keys if key in section]
    if len(present) != 1:
        raise ConfigError(f"exactly one of {' / '.join(keys)} is required, got {len(present)}", field=f"{name}.{keys[0]}")
    return present[0]


def _quantity_text(value: float, unit: str) -> str:
    return f"{value!r} {unit}"


@dataclass(frozen=True)
class SystemSection:
    """Oscillator and readout hardware, in SI."""

    kind: ReadoutKind
    mass: float
    omega_m: float
    gamma: float
    kappa: Optional[float] = None
    chi_e: Optional[float] = None
    ell: Optional[float] = None
    wavelength: Optional[float] = None
    coupling_form: CouplingForm = CouplingForm.FULL

    @property
    def oscillator(self) -> MechanicalOscillator:
        return MechanicalOscillator(self.mass, self.omega_m, self.gamma)

    @property
    def converts_power(self) -> bool:
        """Whether laser power can be mapped to a coupling for this system."""
        return self.kind is ReadoutKind.SLAB and None not in (self.chi_e, self.ell, self.wavelength)

    @property
    def omega_0(self) -> Optional[float]:
        return laser_angular_frequency(self.wavelength) if self.wavelength is not None else None


@dataclass(frozen=True)
class DriveSection:
    """Exactly one of a native coupling, a multiple of g_*, or a laser power."""

    g: Optional[float] = None
    g_star_multiple: Optional[float] = None
    power: Optional[float] = None


@dataclass(frozen=True)
class SqueezingSection:
    mode: SqueezingMode = SqueezingMode.NONE
    r: float = 0.0
    theta: Optional[float] = None
    from_db: bool = field(default=False, compare=False)

    def policy(self, r: Optional[float] = None) -> SqueezingPolicy:
        r = self.r if r is None else r
        if self.mode is SqueezingMode.FIXED:
            return FixedAngle(r, self.theta)
        if self.mode is SqueezingMode.OPTIMAL:
            return OptimalAngle(r)
        return NoSqueezing()


@dataclass(frozen=True)
class SweepSection:
    variable: SweepVariable
    scale: SweepScale
    start: float
    stop: float
    points: int
    relative_to_g_star: bool = False

    def grid(self) -> np.ndarray:
        """Sweep values in stored units (g* multiples for relative coupling sweeps)."""
        if self.points == 1:
            return np.array([self.start])
        if self.scale is SweepScale.LOG:
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class SimulationSection:
    """Monte Carlo settings; the oscillator Q is overridden for affordable durations."""

    quality_factor: float = 100.0
    sample_rate: float = 4e6
    duration: float = 5e-3
    trials: int = 1000
    seed: int = 0
    kick: float = 1.0
    kick_in_thresholds: bool = True
    kick_time: KickTimePolicy = KickTimePolicy.FIXED

    def sim_spec(self, kick: float = 0.0) -> SimSpec:
        return SimSpec(
            sample_rate=self.sample_rate,
            duration=self.duration,
            seed=self.seed,
            n_trials=self.trials,
            kick=kick,
            kick_time=self.kick_time,
        )


@dataclass(frozen=True)
class VerifySection:
    """Verification grids; None means derive the grid from the scenario itself."""

    r_grid: Optional[Tuple[float, ...]] = None
    eta_grid: Optional[Tuple[float, ...]] = None
    floor: bool = True


@dataclass(frozen=True)
class Scenario:
    """A validated, unit-normalised scenario."""

    name: str
    system: SystemSection
    drive: DriveSection
    squeezing: SqueezingSection = field(default_factory=SqueezingSection)
    detection: DetectionChain = field(default_factory=DetectionChain)
    sweep: Optional[SweepSection] = None
    simulation: SimulationSection = field(default_factory=SimulationSection)
    verify: VerifySection = field(default_factory=VerifySection)
    notes: str = field(default="", compare=False)

    @property
    def oscillator(self) -> MechanicalOscillator:
        return self.system.oscillator

    @property
    def db_note(self) -> Optional[str]:
        """One-line reminder of the dB convention when squeezing was given in dB."""
        if not self.squeezing.from_db:
            return None
        return f"note: {squeezing_db(self.squeezing.r):.4g} dB read as 10 log10(e^(2r)), r = {self.squeezing.r:.6g}"

    def verify_grids(self) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
        """
        (r, eta) grids for the scaling report.

        Without explicit grids the default r grid is extended by the scenario's own
        squeezing, and eta is checked only at 1 and at the scenario's efficiency, so
        a lossless scenario reports the loss laws as skipped.
        """
        r_grid = self.verify.r_grid
        if r_grid is None:
            r_grid = tuple(sorted(set(DEFAULT_R_GRID) | {self.squeezing.r}))
        eta_grid = self.verify.eta_grid
        if eta_grid is None:
            eta = self.detection.eta
            eta_grid = (1.0,) if eta == 1.0 else (1.0, eta)
        return r_grid, eta_grid

    def _g_star_native(self, osc: MechanicalOscillator) -> float:
        if self.system.kind is ReadoutKind.CAVITY:
            return g_star(osc, Cavity(self.system.kappa, 0.0))
        return g_star(osc)

    def readout(self, oscillator: Optional[MechanicalOscillator] = None) -> Readout:
        osc = oscillator or self.oscillator
        system = self.system
        drive = self.drive
        if drive.power is not None:
            return Slab.from_power(drive.power, system.chi_e, system.ell, system.omega_0, system.coupling_form)
        coupling = drive.g if drive.g is not None else drive.g_star_multiple * self._g_star_native(osc)
        if system.kind is ReadoutKind.CAVITY:
            return Cavity(system.kappa, coupling)
        return Slab(g=coupling)

    def sensor_config(self, oscillator: Optional[MechanicalOscillator] = None) -> SensorConfig:
        osc = oscillator or self.oscillator
        return SensorConfig(osc, self.readout(osc), self.squeezing.policy(), self.detection)

    def sweep_values(self) -> np.ndarray:
        """Sweep grid in working units: rad/s, W, native coupling, r or eta."""
        if self.sweep is None:
            raise ConfigError("scenario has no sweep section", field="sweep")
        values = self.sweep.grid()
        if self.sweep.relative_to_g_star:
            values = values * self._g_star_native(self.oscillator)
        return values

    def config_at(self, value: float) -> SensorConfig:
        """Sensor configuration with the sweep variable set to ``value``."""
        if self.sweep is None:
            raise ConfigError("scenario has no sweep section", field="sweep")
        base = self.sensor_config()
        variable = self.sweep.variable
        if variable is SweepVariable.POWER:
            system = self.system
            return replace(base, readout=Slab.from_power(value, system.chi_e, system.ell, system.omega_0, system.coupling_form))
        if variable is SweepVariable.G:
            return base.with_coupling(value)
        if variable is SweepVariable.R:
            return base.with_squeezing(self.squeezing.policy(r=value))
        if variable is SweepVariable.ETA:
            return base.with_detection(value)
        return base

    def simulation_config(self) -> SensorConfig:
        """Sensor with the simulation's quality factor substituted."""
        osc = self.oscillator
        sim_osc = MechanicalOscillator.from_quality_factor(osc.mass, osc.omega_m, self.simulation.quality_factor)
        return self.sensor_config(sim_osc)


def _parse_system(raw: Dict[str, Any]) -> SystemSection:
    keys = ("kind", "mass", "omega_m", "gamma", "Q", "kappa", "chi_e", "ell", "wavelength", "coupling_form")
    section = _section(raw, "system", keys)
    kind = _enum(ReadoutKind, section.get("kind", "slab"), "system.kind")
    mass = parse_quantity(section.get("mass"), "mass", "system.mass")
    omega_m = parse_quantity(section.get("omega_m"), "frequency", "system.omega_m")
    damping = _exactly_one(section, "system", ("gamma", "Q"))
    if damping == "gamma":
        gamma = parse_quantity(section["gamma"], "frequency", "system.gamma")
    else:
        quality_factor = _plain(section["Q"], "system.Q")
        if not quality_factor > 0:
            raise ConfigError(f"must be > 0, got {quality_factor}", field="system.Q")
        gamma = omega_m / quality_factor

    kappa = None
    if kind is ReadoutKind.CAVITY:
        if "kappa" not in section:
            raise ConfigError("cavity readout requires kappa", field="system.kappa")
        kappa = parse_quantity(section["kappa"], "frequency", "system.kappa")
    elif "kappa" in section:
        raise ConfigError("kappa applies to cavity readout only", field="system.kappa")

    chi_e = _plain(section["chi_e"], "system.chi_e") if "chi_e" in section else None
    ell = parse_quantity(section["ell"], "length", "system.ell") if "ell" in section else None
    wavelength = parse_quantity(section["wavelength"], "length", "system.wavelength") if "wavelength" in section else None
    form = _enum(CouplingForm, section.get("coupling_form", CouplingForm.FULL.value), "system.coupling_form")

    try:
        MechanicalOscillator(mass, omega_m, gamma)
        if kappa is not None:
            Cavity(kappa, 0.0)
        if wavelength is not None:
            laser_angular_frequency(wavelength)
    except ValidationError as e:
        raise ConfigError(e.message, field=f"system.{e.field}")
    return SystemSection(kind, mass, omega_m, gamma, kappa, chi_e, ell, wavelength, form)


def _parse_coupling(value: Any, field_path: str) -> Tuple[float, bool]:
    """Coupling as (number, is_multiple_of_g_star)."""
    number, unit = _split_quantity(value, field_path)
    if unit not in (None, G_STAR_UNIT):
        raise ConfigError(f"coupling is a plain number or a multiple written 'N {G_STAR_UNIT}', got unit {unit!r}", field=field_path)
    if not number >= 0:
        raise ConfigError(f"must be >= 0, got {number}", field=field_path)
    return number, unit == G_STAR_UNIT


def _parse_drive(raw: Dict[str, Any], system: SystemSection) -> DriveSection:
    section = _section(raw, "drive", ("g", "power"))
    key = _exactly_one(section, "drive", ("g", "power"))
    if key == "power":
        if not system.converts_power:
            raise ConfigError("laser power needs a slab with chi_e, ell and wavelength", field="drive.power")
        power = parse_quantity(section["power"], "power", "drive.power")
        if power < 0:
            raise ConfigError(f"must be >= 0, got {power}", field="drive.power")
        return DriveSection(power=power)
    number, relative = _parse_coupling(section["g"], "drive.g")
    return DriveSection(g_star_multiple=number) if relative else DriveSection(g=number)


def _parse_squeezing(raw: Dict[str, Any]) -> SqueezingSection:
    section = _section(raw, "squeezing", ("mode", "r", "dB", "theta"), required=False)
    mode = _enum(SqueezingMode, section.get("mode", "none"), "squeezing.mode")
    strength = [key for key in ("r", "dB") if key in section]
    if len(strength) > 1:
        raise ConfigError("give r or dB, not both", field="squeezing.r")

    if mode is SqueezingMode.NONE:
        if strength or "theta" in section:
            raise ConfigError("mode none takes no r, dB or theta", field=f"squeezing.{(strength or ['theta'])[0]}")
        return SqueezingSection()

    if not strength:
        raise ConfigError(f"mode {mode.value} requires r or dB", field="squeezing.r")
    if strength[0] == "dB":
        db = _plain(section["dB"], "squeezing.dB")
        if db < 0:
            raise ConfigError(f"must be >= 0, got {db}", field="squeezing.dB")
        r, from_db = r_from_db(db), True
    else:
        r, from_db = _plain(section["r"], "squeezing.r"), False
        if r < 0:
            raise ConfigError(f"must be >= 0, got {r}", field="squeezing.r")

    theta = None
    if mode is SqueezingMode.FIXED:
        if "theta" not in section:
            raise ConfigError("fixed-angle squeezing requires theta", field="squeezing.theta")
        theta = parse_quantity(section["theta"], "angle", "squeezing.theta", allow_plain=True)
    elif "theta" in section:
        raise ConfigError("optimal squeezing chooses its own angle; remove theta", field="squeezing.theta")
    return SqueezingSection(mode=mode, r=r, theta=theta, from_db=from_db)


def _parse_detection(raw: Dict[str, Any]) -> DetectionChain:
    section = _section(raw, "detection", ("eta",), required=False)
    eta = _plain(section.get("eta", 1.0), "detection.eta")
    try:
        return DetectionChain(eta)
    except ValidationError as e:
        raise ConfigError(e.message, field="detection.eta")


def _sweep_bound(value: Any, variable: SweepVariable, field_path: str) -> Tuple[float, bool]:
    if variable is SweepVariable.NU:
        return parse_quantity(value, "frequency", field_path), False
    if variable is SweepVariable.POWER:
        return parse_quantity(value, "power", field_path), False
    if variable is SweepVariable.G:
        return _parse_coupling(value, field_path)
    number, unit = _split_quantity(value, field_path)
    if variable is SweepVariable.R and unit == "dB":
        return r_from_db(number), False
    return _plain(value, field_path), False


def _parse_sweep(raw: Dict[str, Any], system: SystemSection, squeezing: SqueezingSection) -> Optional[SweepSection]:
    if raw.get("sweep") is None:
        return None
    section = _section(raw, "sweep", ("variable", "scale", "from", "to", "points"))
    variable = _enum(SweepVariable, section.get("variable"), "sweep.variable")
    scale = _enum(SweepScale, section.get("scale", "linear"), "sweep.scale")
    points = _integer(section.get("points", 1), "sweep.points")
    if points < 1:
        raise ConfigError(f"must be >= 1, got {points}", field="sweep.points")
    if "from" not in section:
        raise ConfigError("sweep requires a start value", field="sweep.from")
    start, relative = _sweep_bound(section["from"], variable, "sweep.from")
    stop, stop_relative = _sweep_bound(section.get("to", section["from"]), variable, "sweep.to")
    if relative != stop_relative:
        raise ConfigError("both ends of a coupling sweep must use the same unit", field="sweep.to")

    if variable is SweepVariable.POWER and not system.converts_power:
        raise ConfigError("power sweep needs a slab with chi_e, ell and wavelength", field="sweep.variable")
    if variable is SweepVariable.R and squeezing.mode is SqueezingMode.NONE:
        raise ConfigError("r sweep needs squeezing mode fixed or optimal", field="sweep.variable")
    for bound, name in ((start, "from"), (stop, "to")):
        if bound < 0:
            raise ConfigError(f"must be >= 0, got {bound}", field=f"sweep.{name}")
        if scale is SweepScale.LOG and bound == 0:
            raise ConfigError("log sweep bounds must be > 0", field=f"sweep.{name}")
        if variable is SweepVariable.ETA and not 0 < bound <= 1:
            raise ConfigError(f"must lie in (0, 1], got {bound}", field=f"sweep.{name}")
    return SweepSection(variable, scale, start, stop, points, relative)


def parse_kick(value: Any) -> Tuple[float, bool]:
    """Kick as (number, is_multiple_of_threshold); SI momenta are converted to natural units."""
    number, unit = _split_quantity(value, "simulation.kick")
    if number < 0:
        raise ConfigError(f"must be >= 0, got {number}", field="simulation.kick")
    if unit == THRESHOLD_UNIT:
        return number, True
    if unit == SI_MOMENTUM_UNIT:
        return momentum_from_si(number), False
    if unit is None:
        return number, False
    raise ConfigError(f"kick is 'N {THRESHOLD_UNIT}', 'X {SI_MOMENTUM_UNIT}' or a natural-unit number, got unit {unit!r}", field="simulation.kick")


def _parse_simulation(raw: Dict[str, Any]) -> SimulationSection:
    keys = ("Q", "sample_rate", "duration", "trials", "seed", "kick", "kick_time")
    section = _section(raw, "simulation", keys, required=False)
    defaults = SimulationSection()
    quality_factor = _plain(section.get("Q", defaults.quality_factor), "simulation.Q")
    if not quality_factor > 0:
        raise ConfigError(f"must be > 0, got {quality_factor}", field="simulation.Q")
    sample_rate = parse_quantity(section["sample_rate"], "rate", "simulation.sample_rate") if "sample_rate" in section else defaults.sample_rate
    duration = parse_quantity(section["duration"], "time", "simulation.duration") if "duration" in section else defaults.duration
    trials = _integer(section.get("trials", defaults.trials), "simulation.trials")
    seed = _integer(section.get("seed", defaults.seed), "simulation.seed")
    kick, in_thresholds = parse_kick(section["kick"]) if "kick" in section else (defaults.kick, defaults.kick_in_thresholds)
    kick_time = _enum(KickTimePolicy, section.get("kick_time", defaults.kick_time.value), "simulation.kick_time")
    simulation = SimulationSection(quality_factor, sample_rate, duration, trials, seed, kick, in_thresholds, kick_time)
    try:
        simulation.sim_spec()
    except ValidationError as e:
        names = {"n_trials": "trials"}
        raise ConfigError(e.message, field=f"simulation.{names.get(e.field, e.field)}")
    return simulation


def _parse_grid(value: Any, field_path: str, low: float, high: float) -> Tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ConfigError("expected a non-empty list", field=field_path)
    grid = tuple(_plain(item, f"{field_path}[{i}]") for i, item in enumerate(value))
    for i, item in enumerate(grid):
        if not low <= item <= high:
            raise ConfigError(f"must lie in [{low}, {high}], got {item}", field=f"{field_path}[{i}]")
    return grid


def _parse_verify(raw: Dict[str, Any]) -> VerifySection:
    section = _section(raw, "verify", ("r", "eta", "floor"), required=False)
    r_grid = _parse_grid(section["r"], "verify.r", 0.0, math.inf) if "r" in section else None
    eta_grid = _parse_grid(section["eta"], "verify.eta", 0.0, 1.0) if "eta" in section else None
    if eta_grid is not None and 0.0 in eta_grid:
        raise ConfigError("efficiency must be > 0", field="verify.eta")
    floor = section.get("floor", True)
    if not isinstance(floor, bool):
        raise ConfigError(f"expected true or false, got {floor!r}", field="verify.floor")
    return VerifySection(r_grid, eta_grid, floor)


def parse_scenario(raw: Any, name: str = "scenario") -> Scenario:
    """Validate a scenario mapping and normalise it to SI."""
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a mapping of sections", field="scenario")
    known = {"name", "notes", "system", "drive", "squeezing", "detection", "sweep", "simulation", "verify"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError("unknown section", field=str(unknown[0]))

    system = _parse_system(raw)
    squeezing = _parse_squeezing(raw)
    scenario = Scenario(
        name=str(raw.get("name", name)),
        system=system,
        drive=_parse_drive(raw, system),
        squeezing=squeezing,
        detection=_parse_detection(raw),
        sweep=_parse_sweep(raw, system, squeezing),
        simulation=_parse_simulation(raw),
        verify=_parse_verify(raw),
        notes=str(raw.get("notes", "")),
    )
    logger.debug(f"Parsed scenario {scenario.name!r}")
    return scenario


def serialize_scenario(scenario: Scenario) -> Dict[str, Any]:
    """Canonical mapping: angular frequencies in rad/s, everything else in base SI units."""
    system = scenario.system
    system_out: Dict[str, Any] = {
        "kind": system.kind.value,
        "mass": _quantity_text(system.mass, "kg"),
        "omega_m": _quantity_text(system.omega_m, "rad/s"),
        "gamma": _quantity_text(system.gamma, "rad/s"),
    }
    if system.kappa is not None:
        system_out["kappa"] = _quantity_text(system.kappa, "rad/s")
    if system.chi_e is not None:
        system_out["chi_e"] = system.chi_e
    if system.ell is not None:
        system_out["ell"] = _quantity_text(system.ell, "m")
    if system.wavelength is not None:
        system_out["wavelength"] = _quantity_text(system.wavelength, "m")
    system_out["coupling_form"] = system.coupling_form.value

    drive = scenario.drive
    if drive.power is not None:
        drive_out = {"power": _quantity_text(drive.power, "W")}
    elif drive.g_star_multiple is not None:
        drive_out = {"g": _quantity_text(drive.g_star_multiple, G_STAR_UNIT)}
    else:
        drive_out = {"g": drive.g}

    squeezing = scenario.squeezing
    squeezing_out: Dict[str, Any] = {"mode": squeezing.mode.value}
    if squeezing.mode is not SqueezingMode.NONE:
        squeezing_out["r"] = squeezing.r
    if squeezing.theta is not None:
        squeezing_out["theta"] = _quantity_text(squeezing.theta, "rad")

    out: Dict[str, Any] = {
        "name": scenario.name,
        "system": system_out,
        "drive": drive_out,
        "squeezing": squeezing_out,
        "detection": {"eta": scenario.detection.eta},
    }

    sweep = scenario.sweep
    if sweep is not None:
        units = {SweepVariable.NU: "rad/s", SweepVariable.POWER: "W"}
        if sweep.relative_to_g_star:
            units[SweepVariable.G] = G_STAR_UNIT

        def bound(value: float) -> Any:
            unit = units.get(sweep.variable)
            return _quantity_text(value, unit) if unit else value

        out["sweep"] = {
            "variable": sweep.variable.value,
            "scale": sweep.scale.value,
            "from": bound(sweep.start),
            "to": bound(sweep.stop),
            "points": sweep.points,
        }

    sim = scenario.simulation
    out["simulation"] = {
        "Q": sim.quality_factor,
        "sample_rate": _quantity_text(sim.sample_rate, "Hz"),
        "duration": _quantity_text(sim.duration, "s"),
        "trials": sim.trials,
        "seed": sim.seed,
        "kick": _quantity_text(sim.kick, THRESHOLD_UNIT) if sim.kick_in_thresholds else sim.kick,
        "kick_time": sim.kick_time.value,
    }
    verify_out: Dict[str, Any] = {}
    if scenario.verify.r_grid is not None:
        verify_out["r"] = list(scenario.verify.r_grid)
    if scenario.verify.eta_grid is not None:
        verify_out["eta"] = list(scenario.verify.eta_grid)
    verify_out["floor"] = scenario.verify.floor
    out["verify"] = verify_out
    if scenario.notes:
        out["notes"] = scenario.notes
    return out


def dump_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(serialize_scenario(scenario), sort_keys=False)


BASELINE: Dict[str, Any] = {
    "name": "table1",
    "notes": "Dielectric slab. The thickness is not part of the published parameter set; 24 nm reproduces P(g_*) ~ 4.4e-7 W.",
    "system": {
        "kind": "slab",
        "mass": "1e-18 kg",
        "omega_m": "100 kHz",
        "gamma": "10 Hz",
        "chi_e": 3.5,
        "wavelength": "1500 nm",
        "ell": "24 nm",
    },
    "drive": {"g": "1 g*"},
    "squeezing": {"mode": "none"},
    "detection": {"eta": 1.0},
    "sweep": {"variable": "nu", "scale": "log", "from": "10 kHz", "to": "1 MHz", "points": 201},
}

BUILTIN_SCENARIOS: Dict[str, Dict[str, Any]] = {"table1": BASELINE, "baseline": BASELINE}


def load_scenario(source: str) -> Scenario:
    """Load a built-in scenario by name or a YAML scenario file by path."""
    if source in BUILTIN_SCENARIOS:
        return parse_scenario(BUILTIN_SCENARIOS[source], name=source)
    path = Path(source)
    try:
        with open(path, "r") as f:
            raw = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError(f"scenario file not found: {source} (built-ins: {', '.join(BUILTIN_SCENARIOS)})", field="config")
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse YAML: {e}", field="config")
    if not raw:
        raise ConfigError("scenario file is empty", field="config")
    return parse_scenario(raw, name=path.stem)


def builtin_names() -> List[str]:
    return sorted(BUILTIN_SCENARIOS)


def override_coupling(scenario: Scenario, value: Any, field_path: str = "drive.g") -> Scenario:
    """Scenario with its drive replaced by a coupling given as a number or 'N g*'."""
    number, relative = _parse_coupling(value, field_path)
    drive = DriveSection(g_star_multiple=number) if relative else DriveSection(g=number)
    return replace(scenario, drive=drive)


def override_kick(scenario: Scenario, value: Any) -> Scenario:
    kick, in_thresholds = parse_kick(value)
    return replace(scenario, simulation=replace(scenario.simulation, kick=kick, kick_in_thresholds=in_thresholds))
