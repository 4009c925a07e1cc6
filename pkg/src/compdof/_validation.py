"""Input validation helpers.

scikit-learn's ``check_array`` rejects complex input, so the estimators in
this package validate through these small helpers instead.
"""
from __future__ import annotations

import numbers

import numpy as np

from .exceptions import ArgumentError


def check_count(value, name, minimum=1, maximum=None):
    """Return ``value`` as an int, raising ArgumentError when out of range."""
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ArgumentError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ArgumentError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ArgumentError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_complex_matrix(M, name="matrix", square=False, shape=None):
    """Coerce to a finite 2-D complex128 array."""
    arr = np.asarray(M)
    if arr.ndim != 2:
        raise ArgumentError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.number):
        raise ArgumentError(f"{name} must be numeric, got dtype {arr.dtype}")
    arr = arr.astype(np.complex128, copy=False)
    if square and arr.shape[0] != arr.shape[1]:
        raise ArgumentError(f"{name} must be square, got shape {arr.shape}")
    if shape is not None and arr.shape != tuple(shape):
        raise ArgumentError(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} has non-finite entries")
    return arr


def check_mask(mask, name="mask", size=None):
    """Coerce a (0,1) matrix to a boolean array."""
    arr = np.asarray(mask)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ArgumentError(f"{name} must be a square 2-D array, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ArgumentError(f"{name} must be {size}x{size}, got {arr.shape}")
    if not np.all((arr == 0) | (arr == 1)):
        raise ArgumentError(f"{name} entries must be 0 or 1")
    return arr.astype(bool)


def frozen(arr):
    """Return a read-only copy so value objects stay immutable."""
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr
