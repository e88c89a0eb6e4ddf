"""Empirical distribution utilities: step ECDFs and the two-sample KS test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = ["Ecdf", "KsResult", "ecdf", "ks_two_sample", "kolmogorov_sf"]

_SERIES_EPS = 1e-12


@dataclass(frozen=True)
class Ecdf:
    """Right-continuous empirical CDF over a sorted sample."""

    sorted_samples: np.ndarray
    n: int

    def __call__(self, x):
        counts = np.searchsorted(self.sorted_samples, x, side="right")
        return counts / self.n

    def points(self) -> list[tuple[float, float]]:
        """Step points ``(x, F(x))`` at each distinct sample value."""
        xs, counts = np.unique(self.sorted_samples, return_counts=True)
        cum = np.cumsum(counts) / self.n
        return [(float(x), float(f)) for x, f in zip(xs, cum)]


@dataclass(frozen=True)
class KsResult:
    D: float
    p: float
    n1: int
    n2: int


def _as_samples(samples: Iterable[float], name: str) -> np.ndarray:
    arr = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples,
                     dtype=float).ravel()
    if arr.size == 0:
        raise ValueError(f"{name}: at least one sample is required")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: samples must be finite")
    return arr


def ecdf(samples: Iterable[float]) -> Ecdf:
    arr = np.sort(_as_samples(samples, "samples"))
    arr.setflags(write=False)
    return Ecdf(arr, int(arr.size))


def kolmogorov_sf(lam: float) -> float:
    """Asymptotic survival function of the Kolmogorov distribution.

    ``2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lam^2)``, clamped to [0, 1].
    """
    # below this the alternating series has not started to converge and Q(lam) == 1
    # to double precision
    if lam < 0.2:
        return 1.0
    total = 0.0
    sign = 1.0
    k = 1
    while True:
        term = math.exp(-2.0 * k * k * lam * lam)
        total += sign * term
        if term < _SERIES_EPS:
            break
        sign = -sign
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> KsResult:
    """Two-sided two-sample Kolmogorov-Smirnov test.

    D is the exact supremum of ``|F_a - F_b|`` over the pooled sample points.
    The p-value uses the asymptotic Kolmogorov distribution with the
    ``sqrt(m) + 0.12 + 0.11/sqrt(m)`` small-sample correction, where
    ``m = n1*n2/(n1+n2)``.
    """
    xa = np.sort(_as_samples(a, "a"))
    xb = np.sort(_as_samples(b, "b"))
    n1, n2 = xa.size, xb.size
    pooled = np.concatenate([xa, xb])
    ca = np.searchsorted(xa, pooled, side="right")
    cb = np.searchsorted(xb, pooled, side="right")
    # integer numerator keeps D exact up to the one final division
    gap = int(np.max(np.abs(ca * n2 - cb * n1)))
    d = gap / (n1 * n2)
    m = n1 * n2 / (n1 + n2)
    root = math.sqrt(m)
    p = kolmogorov_sf((root + 0.12 + 0.11 / root) * d)
    return KsResult(D=d, p=p, n1=int(n1), n2=int(n2))
