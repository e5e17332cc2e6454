"""
Error types for Impulse.

Validation problems are ValueErrors, numerical breakdowns are ArithmeticErrors,
so callers can catch either family without importing this module.
"""

from typing import Any, Dict, List, Optional


class ImpulseError(Exception):
    """Base class for every error raised by impulsecli."""


class ValidationError(ImpulseError, ValueError):
    """A value failed construction-time validation."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}" if field else message)


class ConfigError(ValidationError):
    """A scenario file or user setting violates the schema.

    ``field`` is the dotted path of the offending key, e.g. ``system.mass``.
    """


class NumericalError(ImpulseError, ArithmeticError):
    """A computation has no finite answer for the given inputs."""


class SingularPointError(NumericalError):
    """Undamped oscillator evaluated exactly on resonance."""


class InfinitePsdError(NumericalError):
    """Zero coupling: the readout carries no force information."""


class UndefinedAngleError(NumericalError):
    """Optimal squeezing angle requested without back-action to rotate against."""


class QuadratureError(NumericalError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, value: float = float("nan"), error_estimate: float = float("nan"), evaluations: int = 0, messages: Optional[List[str]] = None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate
        self.evaluations = evaluations
        self.messages = list(messages or [])

    def diagnostics(self) -> Dict[str, Any]:
        """Partial results gathered before the failure."""
        return {
            "value": self.value,
            "error_estimate": self.error_estimate,
            "evaluations": self.evaluations,
            "messages": self.messages,
        }
