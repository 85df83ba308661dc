"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration and file-format
problems exit with 2, numerical failures (threshold singularities,
non-converging or degenerate fits) with 3, and degenerate data (e.g. empty
count records) with 4.
"""

from __future__ import annotations


class RingSqueezeError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(RingSqueezeError):
    """Invalid run configuration or malformed input file."""


class TraceFormatError(ConfigError):
    """Malformed trace file; ``byte_offset`` locates the offending bytes."""

    def __init__(self, message: str, byte_offset: int | None = None):
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


class ThresholdSingularityError(RingSqueezeError):
    """Pump/detuning/sideband combination sits on the parametric threshold."""


class FitError(RingSqueezeError):
    """Least-squares fit failed."""


class FitConvergenceError(FitError):
    """Fit did not reach the gradient tolerance within the iteration cap."""

    def __init__(self, message: str, residual_norm: float | None = None,
                 iterations: int | None = None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.iterations = iterations


class ConditioningError(FitError):
    """Normal equations are numerically singular.

    ``parameter_pair`` names the most collinear pair of fit parameters.
    """

    def __init__(self, message: str, parameter_pair: tuple[str, str] | None = None):
        super().__init__(message)
        self.parameter_pair = parameter_pair


class DegenerateDataError(RingSqueezeError):
    """Data set cannot support the requested estimator (e.g. no counts)."""
