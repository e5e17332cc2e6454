"""
Pytest configuration and fixtures for the Impulse test suite
"""

import math
import tempfile

from click.testing import CliRunner
import pytest
import yaml

from impulsecli.models import DetectionChain, MechanicalOscillator, NoSqueezing, SensorConfig, Slab, g_star


@pytest.fixture(autouse=True)
def isolate_tests_from_real_config(monkeypatch):
    """
    Global fixture that keeps every test away from the user's settings.

    IMPULSE_CONFIG_DIR points at a throwaway directory and IMPULSE_LOG_LEVEL
    is cleared so a developer's environment cannot change test output.
    """
    with tempfile.TemporaryDirectory() as temp_config_dir:
        monkeypatch.setenv("IMPULSE_CONFIG_DIR", temp_config_dir)
        monkeypatch.delenv("IMPULSE_LOG_LEVEL", raising=False)
        yield


@pytest.fixture
def cli_runner():
    return CliRunner()


@pytest.fixture
def baseline_oscillator():
    """1e-18 kg, omega_m = 2 pi x 100 kHz, gamma = 2 pi x 10 Hz (Q = 1e4)."""
    return MechanicalOscillator(mass=1e-18, omega_m=2 * math.pi * 1e5, gamma=2 * math.pi * 10.0)


@pytest.fixture
def baseline_config(baseline_oscillator):
    """Coherent, lossless slab driven at the optimal coupling."""
    return SensorConfig(baseline_oscillator, Slab(g=g_star(baseline_oscillator)), NoSqueezing(), DetectionChain(1.0))


@pytest.fixture
def unit_oscillator():
    """m = 1, omega_m = 1, Q = 1e4; keeps hand-derived expectations readable."""
    return MechanicalOscillator.from_quality_factor(mass=1.0, omega_m=1.0, quality_factor=1e4)


@pytest.fixture
def write_scenario(tmp_path):
    """Write a scenario mapping to a YAML file and return its path as a string."""

    def _write(data, name="scenario.yaml"):
        path = tmp_path / name
        path.write_text(yaml.safe_dump(data, sort_keys=False))
        return str(path)

    return _write


@pytest.fixture
def small_verify_scenario():
    """Baseline oscillator with a four-point verification grid and no floor sweep."""
    return {
        "name": "small-verify",
        "system": {"kind": "slab", "mass": "1e-18 kg", "omega_m": "100 kHz", "gamma": "10 Hz"},
        "drive": {"g": "1 g*"},
        "verify": {"r": [0.0, 1.0], "eta": [1.0, 0.5], "floor": False},
    }
