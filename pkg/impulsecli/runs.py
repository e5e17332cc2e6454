"""
Scenario-level operations behind the CLI subcommands.

Each run_* function takes a parsed Scenario and returns a Table (or a report)
ready for export; none of them print.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
import logging
import math
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, NumericalError
from .export import Table
from .models import (
    SPEED_OF_LIGHT,
    SensorConfig,
    g_star,
    min_threshold_ratio,
    momentum_to_si,
    power_for_coupling,
    psd_to_si,
    r_max,
    sql_threshold,
    sql_threshold_si,
    squeezing_db,
)
from .response import optimal_angle, optimal_angle_grid
from .scaling import ScalingReport, scaling_report
from .scenario import Scenario, SweepVariable, parse_quantity
from .simulate import SimulationSummary, band_limited_threshold, matched_filter_snr
from .spectra import psd_grid
from .threshold import QuadratureSpec, ThresholdResult, momentum_threshold, optimize_coupling

logger = logging.getLogger(__name__)

PSD_COLUMNS = ["frequency_Hz", "S_FF_N2s", "shot_N2s", "backaction_N2s", "cross_N2s", "loss_N2s"]
ANGLE_COLUMNS = ["frequency_Hz", "theta_rad", "theta_unwrapped_rad"]
SIMULATION_COLUMNS = ["trial", "kick_index", "estimator_peak", "snr"]
THRESHOLD_TAIL = ["g_over_g_star", "delta_p_kg_m_s", "ratio_to_sql", "flags", "status"]
SWEEP_COLUMNS = {
    SweepVariable.POWER: "power_W",
    SweepVariable.G: "g_natural",
    SweepVariable.R: "r",
    SweepVariable.ETA: "eta",
}


def _require_sweep(scenario: Scenario, allowed: Tuple[SweepVariable, ...], command: str) -> None:
    if scenario.sweep is None:
        raise ConfigError(f"{command} needs a sweep section", field="sweep")
    if scenario.sweep.variable not in allowed:
        names = ", ".join(variable.value for variable in allowed)
        raise ConfigError(f"{command} sweeps {names}, got {scenario.sweep.variable.value}", field="sweep.variable")


def _meta(scenario: Scenario) -> Dict[str, Any]:
    meta: Dict[str, Any] = {"scenario": scenario.name}
    if scenario.db_note:
        meta["note"] = scenario.db_note
    return meta


def _relative_coupling(config: SensorConfig) -> float:
    return config.readout.effective_coupling / g_star(config.oscillator)


def run_psd(scenario: Scenario, workers: Optional[int] = None) -> Table:
    """Force PSD and its decomposition over the scenario's frequency sweep, in SI."""
    _require_sweep(scenario, (SweepVariable.NU,), "psd")
    config = scenario.sensor_config()
    points = psd_grid(config, scenario.sweep_values(), workers=workers)

    table = Table(columns=list(PSD_COLUMNS), meta=_meta(scenario))
    table.meta["g_over_g_star"] = _relative_coupling(config)
    for point in points:
        b = point.breakdown
        table.append([point.nu / (2.0 * math.pi), psd_to_si(point.s_ff), psd_to_si(b.shot), psd_to_si(b.backaction), psd_to_si(b.cross), psd_to_si(b.loss)])
    logger.info(f"PSD evaluated at {len(points)} frequencies for scenario {scenario.name!r}")
    return table


def run_optimal_angle(scenario: Scenario) -> Table:
    """Optimal squeezing angle over the frequency sweep, wrapped and unwrapped."""
    _require_sweep(scenario, (SweepVariable.NU,), "optimal-angle")
    config = scenario.sensor_config()
    nus = scenario.sweep_values()
    wrapped = np.atleast_1d(optimal_angle(config, np.asarray(nus, dtype=float)))
    unwrapped = optimal_angle_grid(config, nus, unwrap=True)

    table = Table(columns=list(ANGLE_COLUMNS), meta=_meta(scenario))
    table.meta["g_over_g_star"] = _relative_coupling(config)
    for nu, theta, theta_unwrapped in zip(nus, wrapped, unwrapped):
        table.append([float(nu) / (2.0 * math.pi), float(theta), float(theta_unwrapped)])
    return table


def _threshold_point(task) -> Tuple[Optional[ThresholdResult], Optional[SensorConfig], str]:
    config, optimize, quad = task
    try:
        if optimize:
            coupling, result = optimize_coupling(config, quad=quad)
            return result, config.with_coupling(coupling), "ok"
        return momentum_threshold(config, quad), config, "ok"
    except NumericalError as e:
        logger.error(f"Threshold point failed: {e}")
        return None, config, f"error: {e}"


def run_threshold_sweep(scenario: Scenario, optimize: bool = False, quad: Optional[QuadratureSpec] = None, workers: Optional[int] = None) -> Table:
    """
    Momentum threshold at every sweep value.

    With ``optimize`` the coupling is re-optimised per point, giving the lower
    envelope; a failing point becomes a row with an error status.
    """
    _require_sweep(scenario, tuple(SWEEP_COLUMNS), "threshold")
    variable = scenario.sweep.variable
    if optimize and variable in (SweepVariable.POWER, SweepVariable.G):
        raise ConfigError("--optimize chooses the coupling itself; sweep r or eta instead", field="sweep.variable")

    values = scenario.sweep_values()
    tasks = []
    for value in values:
        try:
            tasks.append((scenario.config_at(float(value)), optimize, quad))
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(str(e), field="sweep")

    logger.info(f"Threshold sweep over {variable.value}: {len(tasks)} points{' with coupling optimisation' if optimize else ''}")
    if workers and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_threshold_point, tasks))
    else:
        results = [_threshold_point(task) for task in tasks]

    table = Table(columns=[SWEEP_COLUMNS[variable]] + THRESHOLD_TAIL, meta=_meta(scenario))
    table.meta["optimized"] = optimize
    table.meta["delta_p_sql_kg_m_s"] = sql_threshold_si(scenario.oscillator)
    for value, (result, config, status) in zip(values, results):
        relative = _relative_coupling(config)
        if result is None:
            table.append([float(value), relative, None, None, [], status])
        else:
            table.append([float(value), relative, result.delta_p_si, result.ratio_to_sql, result.flag_names, status])
    return table


def run_verify(scenario: Scenario, quad: Optional[QuadratureSpec] = None, workers: Optional[int] = None) -> ScalingReport:
    """Scaling-law report for the scenario's oscillator and readout."""
    r_grid, eta_grid = scenario.verify_grids()
    logger.info(f"Verifying scenario {scenario.name!r} at r = {list(r_grid)}, eta = {list(eta_grid)}")
    return scaling_report(
        scenario.oscillator,
        r_grid=r_grid,
        eta_grid=eta_grid,
        quad=quad,
        readout=scenario.readout(),
        workers=workers,
        include_floor=scenario.verify.floor,
    )


def apply_simulation_overrides(
    scenario: Scenario,
    seed: Optional[int] = None,
    trials: Optional[int] = None,
    sample_rate: Optional[str] = None,
    duration: Optional[str] = None,
) -> Scenario:
    """Scenario with command-line simulation flags substituted."""
    sim = scenario.simulation
    changes: Dict[str, Any] = {}
    if seed is not None:
        changes["seed"] = seed
    if trials is not None:
        changes["trials"] = trials
    if sample_rate is not None:
        changes["sample_rate"] = parse_quantity(sample_rate, "rate", "--sample-rate", allow_plain=True)
    if duration is not None:
        changes["duration"] = parse_quantity(duration, "time", "--duration", allow_plain=True)
    if not changes:
        return scenario
    return replace(scenario, simulation=replace(sim, **changes))


def run_simulate(scenario: Scenario, quad: Optional[QuadratureSpec] = None, workers: Optional[int] = None) -> Tuple[SimulationSummary, Table]:
    """Monte Carlo matched-filter run; returns the summary and per-trial rows."""
    sim = scenario.simulation
    config = scenario.simulation_config()
    spec = sim.sim_spec()
    if sim.kick_in_thresholds:
        kick = sim.kick * band_limited_threshold(config, spec, quad) if sim.kick > 0 else 0.0
    else:
        kick = sim.kick
    summary = matched_filter_snr(config, spec.with_kick(kick), quad=quad, workers=workers)

    table = Table(columns=list(SIMULATION_COLUMNS), meta=_meta(scenario))
    for outcome in summary.outcomes:
        table.append([outcome.trial, outcome.kick_index, outcome.estimator_peak, outcome.estimator_peak / summary.noise_sigma])
    table.meta.update(simulation_report(summary))
    return summary, table


def simulation_report(summary: SimulationSummary) -> Dict[str, Any]:
    """Aggregate verdict of a Monte Carlo run."""
    spec = summary.spec
    matched = next(f for f in summary.filters if f.name == "matched")
    alternatives = [f for f in summary.filters if f.name != "matched"]
    return {
        "seed": spec.seed,
        "trials": spec.n_trials,
        "samples": spec.n_samples,
        "sample_rate_Hz": spec.sample_rate,
        "duration_s": spec.duration,
        "band_rad_s": list(spec.band),
        "kick_natural": spec.kick,
        "kick_kg_m_s": momentum_to_si(spec.kick),
        "empirical_snr": summary.empirical_snr,
        "standard_error": summary.standard_error,
        "expected_snr": summary.expected_snr,
        "band_limited_snr": summary.band_limited_snr,
        "full_band_snr": summary.full_band_snr,
        "deviation_sigmas": summary.deviation_sigmas,
        "consistent": summary.consistent,
        "matched_filter_best": all(matched.empirical_snr >= f.empirical_snr for f in alternatives),
        "filters": [{"name": f.name, "expected_snr": f.expected_snr, "empirical_snr": f.empirical_snr} for f in summary.filters],
        "normality": summary.normality._asdict() if summary.normality else None,
        "warnings": list(summary.warnings),
    }


def run_info(scenario: Scenario) -> Dict[str, Any]:
    """Derived quantities of the scenario's oscillator and readout."""
    osc = scenario.oscillator
    system = scenario.system
    config = scenario.sensor_config()
    info: Dict[str, Any] = {
        "scenario": scenario.name,
        "readout": system.kind.value,
        "mass_kg": osc.mass,
        "f_m_Hz": osc.omega_m / (2.0 * math.pi),
        "gamma_over_2pi_Hz": osc.gamma / (2.0 * math.pi),
        "quality_factor": osc.quality_factor,
        "g_star_natural": g_star(osc, config.readout),
        "g_over_g_star": _relative_coupling(config),
        "delta_p_sql_natural": sql_threshold(osc),
        "delta_p_sql_kg_m_s": sql_threshold_si(osc),
        "r_max": r_max(osc),
        "r_max_dB": squeezing_db(r_max(osc)),
        "delta_p_min_kg_m_s": sql_threshold_si(osc) * min_threshold_ratio(osc),
        "squeezing": scenario.squeezing.mode.value,
        "r": scenario.squeezing.r,
        "eta": scenario.detection.eta,
    }
    if system.converts_power:
        info["k0_ell"] = system.ell * system.omega_0 / SPEED_OF_LIGHT
        info["power_at_g_star_W"] = power_for_coupling(g_star(osc), system.chi_e, system.ell, system.omega_0, system.coupling_form)
    if scenario.db_note:
        info["note"] = scenario.db_note
    return info


def info_lines(info: Dict[str, Any]) -> List[str]:
    lines = []
    for key, value in info.items():
        text = f"{value:.6g}" if isinstance(value, float) else str(value)
        lines.append(f"{key:<22} {text}")
    return lines
