"""Exception types raised across the package."""

from __future__ import annotations

__all__ = [
    "FloquetDptError",
    "IntegrationError",
    "ConvergenceError",
    "DegenerateSteadyStateError",
    "ConfigError",
    "CriticalPointError",
]


class FloquetDptError(Exception):
    """Base class for package-specific failures."""


class IntegrationError(FloquetDptError):
    """Adaptive integration gave up; carries the time actually reached."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (time reached: {t_reached!r})")
        self.t_reached = t_reached


class ConvergenceError(FloquetDptError):
    """An iterative procedure exhausted its budget.

    ``residuals`` holds the best residuals seen (Arnoldi) or the last
    refinement delta (period averaging), so callers can report how far off
    the result was.
    """

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class DegenerateSteadyStateError(FloquetDptError):
    """Leading eigenmatrix has (numerically) zero trace.

    Signals a degenerate / symmetry-broken point where the full-space
    leading eigenpair is not a valid state; use sector-resolved spectra.
    """


class ConfigError(FloquetDptError):
    """Invalid sweep configuration."""


class CriticalPointError(FloquetDptError):
    """No interior gap minimum (or derivative peak) could be located."""
