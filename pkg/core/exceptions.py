"""
Domain exceptions shared by every app.
"""
from typing import Optional


class CimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(CimError):
    """Run configuration is missing or cannot be parsed."""


class ParseError(CimError, ValueError):
    """Malformed input file."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class CapabilityError(CimError):
    """Request exceeds an enforced capability cap."""


class DomainError(CimError, ValueError):
    """Arguments outside the mathematical domain of an operation."""


class SimulationError(CimError):
    """Integration failed."""


class DivergenceError(SimulationError):
    """State became non-finite; the step size is too large."""


class StiffnessError(SimulationError):
    """Adaptive step size underflowed."""
