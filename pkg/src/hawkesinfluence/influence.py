"""Turning fitted weights and event counts into impact percentages and category comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import SupercriticalError
from .fit import AggregateResult
from .hawkes import spectral_radius
from .stats import ks_two_sample
from .validation import check_square, check_vector

__all__ = [
    "ImpactMatrix",
    "CategoryComparison",
    "direct_impact",
    "total_impact",
    "impact",
    "compare_categories",
    "significance_stars",
]


@dataclass(frozen=True)
class ImpactMatrix:
    """Percent of destination events attributed to source events.

    NaN marks destinations without events (no value is reported there).
    """

    direct_pct: np.ndarray
    total_pct: np.ndarray
    event_counts: np.ndarray


@dataclass(frozen=True)
class CategoryComparison:
    """RussianState vs OtherNews per (source, destination) pair.

    ``insufficient[s, d]`` is True when either category has no weight sample
    for the pair; the other arrays are NaN there.
    """

    percent_change: np.ndarray
    ks_D: np.ndarray
    ks_p: np.ndarray
    insufficient: np.ndarray
    stars: list[list[str]]


def _inputs(mean_W, event_counts):
    W = check_square(mean_W, "mean_W")
    N = check_vector(event_counts, "event_counts", length=W.shape[0])
    return W, N


def _as_pct(expected_offspring, N):
    with np.errstate(divide="ignore", invalid="ignore"):
        pct = 100.0 * expected_offspring * N[:, None] / N[None, :]
    pct[:, N == 0] = math.nan
    return pct


def direct_impact(mean_W, event_counts) -> np.ndarray:
    """First-generation attribution ``100 * W[s, d] * N_s / N_d``."""
    W, N = _inputs(mean_W, event_counts)
    return _as_pct(W, N)


def total_impact(mean_W, event_counts) -> np.ndarray:
    """Attribution over all descendant generations, ``W + W^2 + ... = W (I - W)^{-1}``."""
    W, N = _inputs(mean_W, event_counts)
    rho = spectral_radius(W)
    if rho >= 1.0:
        raise SupercriticalError(rho, "total_impact")
    descendants = W @ np.linalg.inv(np.eye(W.shape[0]) - W)
    return _as_pct(descendants, N)


def impact(mean_W, event_counts) -> ImpactMatrix:
    W, N = _inputs(mean_W, event_counts)
    return ImpactMatrix(direct_impact(W, N), total_impact(W, N), N.astype(int))


def significance_stars(p: float) -> str:
    if not math.isfinite(p):
        return ""
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


def compare_categories(agg: AggregateResult, treated: str = "RussianState", reference: str = "OtherNews") -> CategoryComparison:
    K = agg.K
    change = np.full((K, K), math.nan)
    D = np.full((K, K), math.nan)
    p = np.full((K, K), math.nan)
    insufficient = np.zeros((K, K), dtype=bool)
    stars = [["" for _ in range(K)] for _ in range(K)]
    a_all = agg.weight_samples.get(treated)
    b_all = agg.weight_samples.get(reference)
    for s in range(K):
        for d in range(K):
            a = a_all[s][d] if a_all else []
            b = b_all[s][d] if b_all else []
            if not a or not b:
                insufficient[s, d] = True
                continue
            w_r, w_o = float(np.mean(a)), float(np.mean(b))
            if w_o > 0:
                change[s, d] = 100.0 * (w_r - w_o) / w_o
            res = ks_two_sample(a, b)
            D[s, d], p[s, d] = res.D, res.p
            stars[s][d] = significance_stars(res.p)
    return CategoryComparison(change, D, p, insufficient, stars)
