"""
Configuration module for Impulse

Handles user settings stored in ~/.impulse/config.json
"""

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from .errors import ValidationError
from .threshold import QuadratureSpec

logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ("csv", "json")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

DEFAULT_SETTINGS: Dict[str, Any] = {
    "rel_tol": QuadratureSpec.rel_tol,
    "abs_tol": QuadratureSpec.abs_tol,
    "max_subdivisions": QuadratureSpec.max_subdivisions,
    "resonance_window": QuadratureSpec.resonance_window,
    "default_format": "csv",
    "log_level": "INFO",
    "workers": 1,
}


class Config:
    """User settings manager for Impulse."""

    def __init__(self, config_dir: str = None):
        """
        Initialize configuration.

        Args:
            config_dir: Directory for config file (default: ~/.impulse)
        """
        if config_dir is None:
            env_config_dir = os.environ.get("IMPULSE_CONFIG_DIR")
            if env_config_dir:
                config_dir = env_config_dir
            else:
                config_dir = os.path.expanduser("~/.impulse")

        self.config_dir = Path(config_dir)
        self.config_file = self.config_dir / "config.json"
        self._config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Load settings from file, recreating defaults when missing or corrupt."""
        if not self.config_dir.exists():
            self.config_dir.mkdir(parents=True, exist_ok=True)

        if not self.config_file.exists():
            settings = dict(DEFAULT_SETTINGS)
            self._save_config(settings)
            return settings

        try:
            with open(self.config_file, "r") as f:
                loaded = json.load(f)
            if not isinstance(loaded, dict):
                raise ValueError("settings file must hold a JSON object")
            return loaded
        except (json.JSONDecodeError, IOError, ValueError) as e:
            logger.warning(f"Settings file {self.config_file} is unreadable ({e}); restoring defaults")
            settings = dict(DEFAULT_SETTINGS)
            self._save_config(settings)
            return settings

    def _save_config(self, config: Dict[str, Any]) -> None:
        try:
            with open(self.config_file, "w") as f:
                json.dump(config, f, indent=2)
        except IOError as e:
            logger.warning(f"Could not write settings to {self.config_file}: {e}")

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get a setting.

        Args:
            key: Setting name
            default: Value returned when the key is absent

        Returns:
            Setting value
        """
        return self._config.get(key, default)

    def set(self, key: str, value: Any) -> None:
        self._config[key] = value
        self._save_config(self._config)

    def all(self) -> Dict[str, Any]:
        """Every setting, with defaults filled in for keys missing from the file."""
        merged = dict(DEFAULT_SETTINGS)
        merged.update(self._config)
        return merged

    def get_rel_tol(self) -> float:
        return float(self.get("rel_tol", DEFAULT_SETTINGS["rel_tol"]))

    def set_rel_tol(self, value: float) -> None:
        if not value > 0:
            raise ValidationError(f"must be > 0, got {value}", field="rel_tol")
        self.set("rel_tol", float(value))

    def get_abs_tol(self) -> float:
        return float(self.get("abs_tol", DEFAULT_SETTINGS["abs_tol"]))

    def set_abs_tol(self, value: float) -> None:
        if value < 0:
            raise ValidationError(f"must be >= 0, got {value}", field="abs_tol")
        self.set("abs_tol", float(value))

    def get_max_subdivisions(self) -> int:
        return int(self.get("max_subdivisions", DEFAULT_SETTINGS["max_subdivisions"]))

    def set_max_subdivisions(self, value: int) -> None:
        if value < 1:
            raise ValidationError(f"must be >= 1, got {value}", field="max_subdivisions")
        self.set("max_subdivisions", int(value))

    def get_resonance_window(self) -> float:
        """Half-width, in linewidths, of the finely split region around omega_m."""
        return float(self.get("resonance_window", DEFAULT_SETTINGS["resonance_window"]))

    def set_resonance_window(self, value: float) -> None:
        if not value > 0:
            raise ValidationError(f"must be > 0, got {value}", field="resonance_window")
        self.set("resonance_window", float(value))

    def get_default_format(self) -> str:
        """Get the output format used when --format is not given."""
        value = self.get("default_format", "csv")
        return value if value in OUTPUT_FORMATS else "csv"

    def set_default_format(self, value: str) -> None:
        if value not in OUTPUT_FORMATS:
            raise ValidationError(f"must be one of {', '.join(OUTPUT_FORMATS)}, got {value!r}", field="default_format")
        self.set("default_format", value)

    def get_log_level(self) -> str:
        """Log level, with IMPULSE_LOG_LEVEL taking precedence over the file."""
        value = os.environ.get("IMPULSE_LOG_LEVEL") or self.get("log_level", "INFO")
        value = str(value).upper()
        return value if value in LOG_LEVELS else "INFO"

    def set_log_level(self, value: str) -> None:
        value = value.upper()
        if value not in LOG_LEVELS:
            raise ValidationError(f"must be one of {', '.join(LOG_LEVELS)}, got {value!r}", field="log_level")
        self.set("log_level", value)

    def get_workers(self) -> int:
        """Get the worker pool size for sweeps and simulations."""
        return max(1, int(self.get("workers", 1)))

    def set_workers(self, value: int) -> None:
        if value < 1:
            raise ValidationError(f"must be >= 1, got {value}", field="workers")
        self.set("workers", int(value))

    def quadrature_spec(self, rel_tol: Optional[float] = None) -> QuadratureSpec:
        """Build the quadrature settings, optionally overriding the relative tolerance."""
        return QuadratureSpec(
            rel_tol=rel_tol if rel_tol is not None else self.get_rel_tol(),
            abs_tol=self.get_abs_tol(),
            max_subdivisions=self.get_max_subdivisions(),
            resonance_window=self.get_resonance_window(),
        )
