"""Small input-validation helpers shared across the package."""
from __future__ import annotations

import numbers

import numpy as np


def as_float_array(x, name, *, ndim=None, shape=None):
    """Coerce to a C-contiguous float64 ndarray and check its shape.

    Args:
        x: array-like input.
        name: argument name used in error messages.
        ndim: required number of dimensions, if any.
        shape: required exact shape, if any.

    Returns:
        np.ndarray of dtype float64.

    Raises:
        ValueError: on dimension/shape mismatch or non-finite entries.
    """
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got ndim={arr.ndim}")
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_scalar(x, name, *, minimum=None, maximum=None,
                 min_inclusive=True, max_inclusive=True):
    """Validate a real scalar against an optional closed/open range."""
    if not isinstance(x, numbers.Real) or isinstance(x, bool):
        raise ValueError(f"{name} must be a real scalar, got {x!r}")
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x!r}")
    if minimum is not None:
        if min_inclusive and x < minimum:
            raise ValueError(f"{name} must be >= {minimum}, got {x}")
        if not min_inclusive and x <= minimum:
            raise ValueError(f"{name} must be > {minimum}, got {x}")
    if maximum is not None:
        if max_inclusive and x > maximum:
            raise ValueError(f"{name} must be <= {maximum}, got {x}")
        if not max_inclusive and x >= maximum:
            raise ValueError(f"{name} must be < {maximum}, got {x}")
    return x


def check_index(x, name, *, minimum=0, maximum=None):
    """Validate an integer (bools rejected), optionally range-checked."""
    if isinstance(x, bool) or not isinstance(x, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {x!r}")
    x = int(x)
    if minimum is not None and x < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {x}")
    if maximum is not None and x > maximum:
        raise ValueError(f"{name} must be <= {maximum}, got {x}")
    return x


def check_rng(rng):
    """Coerce None, an int seed, or a Generator into a numpy Generator."""
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.default_rng(rng)
    if isinstance(rng, np.random.Generator):
        return rng
    raise ValueError(f"rng must be None, an int seed, or numpy Generator, got {type(rng)}")
