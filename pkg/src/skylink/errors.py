"""Exception taxonomy shared across the library.

Validation failures of user-supplied values raise ValueError subclasses so
callers can catch them generically; numeric runtime failures raise
RuntimeError subclasses. The CLI maps the former to exit code 2 and the
latter to exit code 1.
"""

from __future__ import annotations


class SkylinkError(Exception):
    """Base class for all library errors."""


class DomainError(SkylinkError, ValueError):
    """A numeric argument is outside the function's domain."""


class ConfigurationError(SkylinkError, ValueError):
    """A configuration value is missing, malformed, or inconsistent."""


class SchemaError(SkylinkError, ValueError):
    """A file does not match its declared schema (CSV header, JSON keys)."""


class FitError(SkylinkError, RuntimeError):
    """Curve fitting received degenerate input or failed to produce a fit."""


class TrainingDivergedError(SkylinkError, RuntimeError):
    """Training produced non-finite parameters.

    Attributes:
        parameter_class: which parameter group went non-finite
            ("weights", "centers" or "spans").
        epoch: epoch index at failure, if known.
    """

    def __init__(self, parameter_class: str, epoch: int | None = None):
        self.parameter_class = parameter_class
        self.epoch = epoch
        where = f" at epoch {epoch}" if epoch is not None else ""
        super().__init__(
            f"training diverged{where}: non-finite values in {parameter_class}"
        )
