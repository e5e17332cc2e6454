"""
Impulse - quantum-limited impulse sensing calculator

Command-line entry point: scenario loading, subcommand dispatch and output.
"""

from contextlib import contextmanager
from dataclasses import replace
import logging
import sys
from typing import Optional

import click

from impulsecli import __version__
from impulsecli.config import LOG_LEVELS, OUTPUT_FORMATS, Config
from impulsecli.errors import NumericalError, QuadratureError, ValidationError
from impulsecli.export import render, to_json, write_text
from impulsecli.runs import (
    apply_simulation_overrides,
    info_lines,
    run_info,
    run_optimal_angle,
    run_psd,
    run_simulate,
    run_threshold_sweep,
    run_verify,
)
from impulsecli.scenario import Scenario, builtin_names, load_scenario, override_coupling, override_kick

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERICAL_ERROR = 3


def setup_logging(log_level: str = "INFO") -> None:
    """Set up logging on stderr so tables on stdout stay clean."""
    numeric_level = getattr(logging, log_level.upper(), None)
    if not isinstance(numeric_level, int):
        raise ValueError(f"Invalid log level: {log_level}")

    logging.basicConfig(level=numeric_level, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s", handlers=[logging.StreamHandler(sys.stderr)], force=True)


def _fail(message: str, code: int) -> None:
    click.echo(f"❌ {message}", err=True)
    sys.exit(code)


@contextmanager
def _exit_codes():
    """Translate library errors into the documented exit codes."""
    try:
        yield
    except ValidationError as e:
        _fail(f"Configuration error: {e}", EXIT_CONFIG_ERROR)
    except QuadratureError as e:
        diagnostics = e.diagnostics()
        _fail(f"Numerical failure: {e} (value so far {diagnostics['value']:.6g}, error estimate {diagnostics['error_estimate']:.3g})", EXIT_NUMERICAL_ERROR)
    except NumericalError as e:
        _fail(f"Numerical failure: {e}", EXIT_NUMERICAL_ERROR)


def _settings() -> Config:
    ctx = click.get_current_context()
    root = ctx.find_root()
    if not isinstance(root.obj, Config):
        root.obj = Config()
    return root.obj


def _load(config_source: str, coupling: Optional[str] = None) -> Scenario:
    scenario = load_scenario(config_source)
    if coupling is not None:
        scenario = override_coupling(scenario, coupling, field_path="--coupling")
    if scenario.db_note:
        click.echo(scenario.db_note, err=True)
    return scenario


def _emit(text: str, out: Optional[str], rows: int) -> None:
    if out:
        write_text(text, out)
        click.echo(f"✅ Wrote {rows} rows to {out}")
    else:
        click.echo(text, nl=False)


def common_options(func):
    """Options shared by every scenario-driven subcommand."""
    func = click.option("--quiet", "-q", is_flag=True, help="Only log warnings and errors")(func)
    func = click.option("--workers", "-w", type=int, help="Worker pool size (default: from settings)")(func)
    func = click.option("--format", "-f", "fmt", type=click.Choice(list(OUTPUT_FORMATS)), help="Output format (default: from settings)")(func)
    func = click.option("--out", "-o", type=click.Path(dir_okay=False), help="Write output to a file instead of stdout")(func)
    func = click.option("--config", "-c", "config_source", default="table1", show_default=True, help=f"Scenario YAML file or built-in name ({', '.join(builtin_names())})")(func)
    return func


def _prepare(quiet: bool, fmt: Optional[str], workers: Optional[int]):
    settings = _settings()
    if quiet:
        setup_logging("WARNING")
    return settings, fmt or settings.get_default_format(), workers or settings.get_workers()


@click.group(context_settings=dict(help_option_names=["-h", "--help"]))
@click.version_option(version=__version__, prog_name="Impulse")
@click.pass_context
def cli(ctx):
    """Impulse - quantum-limited impulse sensing calculator

    Force noise spectra, momentum thresholds and scaling-law checks for
    optomechanical impulse sensors.

    Examples:
        impulse psd                               # default force PSD as CSV
        impulse psd --coupling "10 g*"            # same, ten times the optimal coupling
        impulse threshold -c scan.yaml --optimize # optimised threshold sweep
        impulse verify                            # check the analytic scaling laws
        impulse simulate --trials 1000 --seed 7   # Monte Carlo matched filter
    """
    settings = Config()
    ctx.obj = settings
    setup_logging(settings.get_log_level())


@cli.command(name="psd")
@common_options
@click.option("--coupling", "-g", help="Override the drive coupling (number or 'N g*')")
def psd_command(config_source, out, fmt, workers, quiet, coupling):
    """Force-noise PSD and its decomposition over the frequency sweep."""
    settings, fmt, workers = _prepare(quiet, fmt, workers)
    with _exit_codes():
        table = run_psd(_load(config_source, coupling), workers=workers)
        _emit(render(table, fmt), out, len(table.rows))


@cli.command(name="optimal-angle")
@common_options
@click.option("--coupling", "-g", help="Override the drive coupling (number or 'N g*')")
def optimal_angle_command(config_source, out, fmt, workers, quiet, coupling):
    """Optimal squeezing angle over the frequency sweep."""
    settings, fmt, workers = _prepare(quiet, fmt, workers)
    with _exit_codes():
        table = run_optimal_angle(_load(config_source, coupling))
        _emit(render(table, fmt), out, len(table.rows))


@cli.command(name="threshold")
@common_options
@click.option("--coupling", "-g", help="Override the drive coupling (number or 'N g*')")
@click.option("--optimize", is_flag=True, help="Optimise the coupling at every sweep point")
def threshold_command(config_source, out, fmt, workers, quiet, coupling, optimize):
    """Momentum threshold over a power, coupling, r or eta sweep."""
    settings, fmt, workers = _prepare(quiet, fmt, workers)
    with _exit_codes():
        table = run_threshold_sweep(_load(config_source, coupling), optimize=optimize, quad=settings.quadrature_spec(), workers=workers)
        _emit(render(table, fmt), out, len(table.rows))
        failed = [row for row in table.rows if row[-1] != "ok"]
        if failed:
            click.echo(f"⚠️  {len(failed)} of {len(table.rows)} points failed; see the status column", err=True)


@cli.command(name="verify")
@common_options
@click.option("--no-floor", is_flag=True, help="Skip the squeezing-floor sweep")
def verify_command(config_source, out, fmt, workers, quiet, no_floor):
    """Check the analytic threshold scaling laws against optimised numerics."""
    settings, fmt, workers = _prepare(quiet, fmt, workers)
    with _exit_codes():
        scenario = _load(config_source)
        if no_floor:
            scenario = replace(scenario, verify=replace(scenario.verify, floor=False))
        report = run_verify(scenario, quad=settings.quadrature_spec(), workers=workers)

    payload = report.to_dict()
    payload["scenario"] = scenario.name
    if out:
        write_text(to_json(payload), out)
    if fmt == "json" and not out:
        click.echo(to_json(payload), nl=False)
    else:
        for line in report.summary_lines():
            click.echo(line)

    if not report.passed:
        failed = sorted({check.law for check in report.failures})
        _fail(f"Scaling law(s) failed: {', '.join(failed)}", EXIT_VERIFICATION_FAILED)
    click.echo("✅ All scaling laws pass", err=fmt == "json" and not out)


@cli.command(name="simulate")
@common_options
@click.option("--seed", type=int, help="Root seed for the per-trial random streams")
@click.option("--trials", type=int, help="Number of Monte Carlo trials")
@click.option("--sample-rate", help="Sample rate, e.g. '4 MHz' (plain numbers are Hz)")
@click.option("--duration", help="Trial length, e.g. '5 ms' (plain numbers are s)")
@click.option("--kick", help="Kick size: 'N threshold', 'X kg m/s' or a natural-unit number")
def simulate_command(config_source, out, fmt, workers, quiet, seed, trials, sample_rate, duration, kick):
    """Monte Carlo check of the matched-filter SNR."""
    settings, fmt, workers = _prepare(quiet, fmt, workers)
    with _exit_codes():
        scenario = apply_simulation_overrides(_load(config_source), seed=seed, trials=trials, sample_rate=sample_rate, duration=duration)
        if kick is not None:
            scenario = override_kick(scenario, kick)
        summary, table = run_simulate(scenario, quad=settings.quadrature_spec(), workers=workers)
        _emit(render(table, fmt), out, len(table.rows))

    for message in summary.warnings:
        click.echo(f"⚠️  {message}", err=True)
    verdict = f"empirical SNR {summary.empirical_snr:.4f} +/- {summary.standard_error:.4f}, band-limited analytic {summary.band_limited_snr:.4f} ({summary.deviation_sigmas:.2f} sigma)"
    if not summary.consistent:
        _fail(f"Monte Carlo disagrees: {verdict}", EXIT_VERIFICATION_FAILED)
    click.echo(f"✅ Monte Carlo agrees: {verdict}", err=not out)


@cli.command(name="info")
@click.option("--config", "-c", "config_source", default="table1", show_default=True, help="Scenario YAML file or built-in name")
@click.option("--coupling", "-g", help="Override the drive coupling (number or 'N g*')")
@click.option("--format", "-f", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
def info_command(config_source, coupling, fmt):
    """Show derived quantities for a scenario (Q, g_*, SQL, r_max, power at g_*)."""
    with _exit_codes():
        info = run_info(_load(config_source, coupling))
    if fmt == "json":
        click.echo(to_json(info), nl=False)
        return
    for line in info_lines(info):
        click.echo(line)


@cli.command(name="settings")
@click.option("--rel-tol", type=float, help="Relative tolerance of the threshold quadrature")
@click.option("--abs-tol", type=float, help="Absolute tolerance of the threshold quadrature")
@click.option("--max-subdivisions", type=int, help="Subinterval limit per quadrature panel")
@click.option("--resonance-window", type=float, help="Half-width in linewidths of the split region around omega_m")
@click.option("--default-format", type=click.Choice(list(OUTPUT_FORMATS)), help="Output format when --format is omitted")
@click.option("--log-level", type=click.Choice(list(LOG_LEVELS), case_sensitive=False), help="Default log level")
@click.option("--workers", type=int, help="Default worker pool size")
def settings_command(rel_tol, abs_tol, max_subdivisions, resonance_window, default_format, log_level, workers):
    """Manage Impulse user settings."""
    settings = _settings()
    updates = [
        ("rel_tol", rel_tol, settings.set_rel_tol, "Quadrature rel_tol"),
        ("abs_tol", abs_tol, settings.set_abs_tol, "Quadrature abs_tol"),
        ("max_subdivisions", max_subdivisions, settings.set_max_subdivisions, "Max subdivisions"),
        ("resonance_window", resonance_window, settings.set_resonance_window, "Resonance window"),
        ("default_format", default_format, settings.set_default_format, "Default format"),
        ("log_level", log_level, settings.set_log_level, "Log level"),
        ("workers", workers, settings.set_workers, "Workers"),
    ]

    with _exit_codes():
        for _, value, setter, label in updates:
            if value is not None:
                setter(value)
                click.echo(f"✅ {label}: {value}")

    if all(value is None for _, value, _, _ in updates):
        click.echo("⚙️  Impulse settings:")
        for key, value in settings.all().items():
            click.echo(f"  {key}: {value}")
        click.echo(f"  (stored in {settings.config_file})")


def main():
    """Console script entry point."""
    cli()


if __name__ == "__main__":
    main()
