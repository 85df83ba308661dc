"""Input validation helpers.

Small, explicit checks used by the domain dataclasses and the estimator
``fit``/``predict`` entry points. All raise ``ValueError`` with the offending
field named, so configuration errors surface with a usable message.
"""

from __future__ import annotations

import numpy as np


def require_finite(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


def require_positive(name: str, value: float) -> float:
    value = require_finite(name, value)
    if value <= 0.0:
        raise ValueError(f"{name} must be strictly positive, got {value!r}")
    return value


def require_nonnegative(name: str, value: float) -> float:
    value = require_finite(name, value)
    if value < 0.0:
        raise ValueError(f"{name} must be nonnegative, got {value!r}")
    return value


def require_unit_interval(name: str, value: float) -> float:
    value = require_finite(name, value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def require_seed(name: str, value: int) -> int:
    value = int(value)
    if not 0 <= value < 2**64:
        raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value!r}")
    return value


def as_trace_matrix(traces, min_samples: int = 8) -> np.ndarray:
    """Coerce to a rectangular 2-D float array of voltage traces."""
    arr = np.asarray(traces, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"traces must be a 2-D matrix, got ndim={arr.ndim}")
    if arr.shape[1] < min_samples:
        raise ValueError(
            f"traces must have at least {min_samples} samples per pulse, "
            f"got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("traces contain non-finite values")
    return arr


def as_count_array(name: str, counts) -> np.ndarray:
    arr = np.asarray(counts)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got ndim={arr.ndim}")
    if arr.size and arr.min() < 0:
        raise ValueError(f"{name} must be nonnegative integers")
    return arr.astype(np.int64)
