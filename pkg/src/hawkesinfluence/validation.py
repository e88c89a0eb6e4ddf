"""Input validation helpers shared by the model, fitting and estimator code."""

from __future__ import annotations

import numbers

import numpy as np


def check_vector(x, name, length=None, nonnegative=True):
    arr = np.array(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} must have length {length}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if nonnegative and np.any(arr < 0):
        raise ValueError(f"{name} must be non-negative")
    return arr


def check_square(x, name, size=None, nonnegative=True):
    arr = np.array(x, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"{name} must be {size}x{size}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if nonnegative and np.any(arr < 0):
        raise ValueError(f"{name} must be non-negative")
    return arr


def check_positive(x, name):
    if not isinstance(x, numbers.Real) or not np.isfinite(x) or x <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {x!r}")
    return float(x)


def check_int(x, name, minimum=0):
    if isinstance(x, bool) or not isinstance(x, numbers.Integral) or x < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {x!r}")
    return int(x)


def check_prior(prior, name):
    try:
        shape, rate = prior
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a (shape, rate) pair, got {prior!r}") from None
    return check_positive(shape, f"{name} shape"), check_positive(rate, f"{name} rate")


def check_sequence(seq, K=None, nonempty=True):
    """Check an event sequence against a group universe of size ``K``."""
    if nonempty and len(seq.events) == 0:
        raise ValueError(f"sequence {seq.url!r} has no events")
    if K is not None and seq.K != K:
        raise ValueError(f"sequence {seq.url!r} has {seq.K} groups, expected {K}")
    return seq
