"""Exception hierarchy shared across the package.

ConfigError maps to CLI exit code 2, NumericError (and subclasses) to exit
code 3.
"""


class PdkfError(Exception):
    """Base class for all package errors."""


class ConfigError(PdkfError):
    """Invalid or infeasible configuration."""


class DimensionError(PdkfError, ValueError):
    """Inconsistent array shapes in a model or filter call."""


class NumericError(PdkfError):
    """Base class for numerical failures (singular systems, divergence)."""


class FilterNumericsError(NumericError):
    """Innovation covariance numerically singular during a filter update."""


class RiccatiConvergenceError(NumericError):
    """Covariance recursion did not reach a fixed point within max_iter."""

    def __init__(self, message, last_delta=None):
        super().__init__(message)
        self.last_delta = last_delta


class StabilityError(NumericError):
    """Closed-loop variance recursion is not stable; theory inapplicable."""

    def __init__(self, message, spectral_radius=None):
        super().__init__(message)
        self.spectral_radius = spectral_radius
