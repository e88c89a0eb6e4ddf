"""Per-URL Hawkes fitting by EM over the latent branching structure, and corpus aggregation.

The E-step assigns every event to the background or to an earlier event
(parent); the M-step is the closed-form MAP update under independent gamma
priors on the background rates and the weights. With a shared exponential
decay the parent responsibilities only enter through per-group decayed
counts, so each iteration is ``O(N K^2)`` after an ``O(N K)`` precomputation.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .events import EventSequence
from .hawkes import HawkesParams, excitation_state, strict_times
from .urls import Category
from .validation import check_int, check_positive, check_prior, check_sequence

logger = logging.getLogger(__name__)

__all__ = [
    "FitConfig",
    "FitResult",
    "AggregateResult",
    "AGGREGATE_CATEGORIES",
    "responsibilities",
    "penalized_log_likelihood",
    "em_fit",
    "select_beta",
    "fit_corpus",
    "aggregate",
]

AGGREGATE_CATEGORIES = ("All", "RussianState", "OtherNews")
BETA_TIE = 1e-10


@dataclass(frozen=True)
class FitConfig:
    beta_grid: tuple[float, ...] = (1.0,)
    max_iter: int = 500
    tol: float = 1e-6
    mu_prior: tuple[float, float] = (1.01, 0.01)
    w_prior: tuple[float, float] = (1.01, 0.01)
    min_events_full_fit: int = 3

    def __post_init__(self):
        grid = tuple(check_positive(b, "beta_grid entry") for b in self.beta_grid)
        if not grid:
            raise ValueError("beta_grid must be nonempty")
        object.__setattr__(self, "beta_grid", grid)
        check_int(self.max_iter, "max_iter", minimum=1)
        check_positive(self.tol, "tol")
        object.__setattr__(self, "mu_prior", check_prior(self.mu_prior, "mu_prior"))
        object.__setattr__(self, "w_prior", check_prior(self.w_prior, "w_prior"))
        check_int(self.min_events_full_fit, "min_events_full_fit")


@dataclass
class FitResult:
    params: HawkesParams | None
    loglik: float
    penalized_loglik: float
    iterations: int
    converged: bool
    n_events_per_group: np.ndarray
    degenerate: bool
    history: tuple[float, ...] = ()
    url: str = ""
    category: Category = Category.OTHER
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and self.params is not None

    def to_dict(self) -> dict:
        return {
            "url": self.url,
            "category": Category(self.category).value,
            "params": None if self.params is None else self.params.to_dict(),
            "loglik": _json_float(self.loglik),
            "penalized_loglik": _json_float(self.penalized_loglik),
            "iterations": self.iterations,
            "converged": self.converged,
            "degenerate": self.degenerate,
            "n_events_per_group": [int(n) for n in self.n_events_per_group],
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d) -> "FitResult":
        params = None if d.get("params") is None else HawkesParams.from_dict(d["params"])
        return cls(
            params=params,
            loglik=_float_or_nan(d.get("loglik")),
            penalized_loglik=_float_or_nan(d.get("penalized_loglik")),
            iterations=int(d.get("iterations", 0)),
            converged=bool(d.get("converged", False)),
            n_events_per_group=np.asarray(d["n_events_per_group"], dtype=int),
            degenerate=bool(d.get("degenerate", False)),
            url=d.get("url", ""),
            category=Category(d.get("category", "Other")),
            error=d.get("error"),
        )


def _json_float(x):
    return None if x is None or not math.isfinite(x) else float(x)


def _float_or_nan(x):
    return math.nan if x is None else float(x)


class _Problem:
    """Data-dependent quantities of one (sequence, beta) pair, fixed across EM iterations."""

    def __init__(self, seq: EventSequence, beta: float):
        self.K = seq.K
        self.beta = float(beta)
        self.times = strict_times(seq.times)
        self.marks = seq.marks
        self.T = max(float(seq.window_T), float(self.times[-1]) if len(self.times) else 0.0)
        self.counts = np.bincount(self.marks, minlength=self.K)
        self.observed = self.counts > 0
        self.A = excitation_state(self.times, self.marks, self.K, self.beta)
        # integrated kernel mass left in the window after each source event
        self.exposure = np.bincount(self.marks, weights=1.0 - np.exp(-self.beta * (self.T - self.times)),
                                    minlength=self.K)
        self.onehot = np.zeros((len(self.marks), self.K))
        self.onehot[np.arange(len(self.marks)), self.marks] = 1.0

    def excitation(self, W):
        # [i, s] = beta * A[i, s] * W[s, g_i]
        return self.beta * self.A * W[:, self.marks].T

    def loglik(self, mu, W, lam=None):
        if lam is None:
            lam = mu[self.marks] + self.excitation(W).sum(axis=1)
        if np.any(lam <= 0):
            return -math.inf
        return float(np.sum(np.log(lam)) - mu.sum() * self.T - self.exposure @ W.sum(axis=1))

    def penalty(self, mu, W, config: FitConfig):
        a0, b0 = config.mu_prior
        a1, b1 = config.w_prior
        Wo = W[self.observed]
        with np.errstate(divide="ignore"):
            return float(np.sum((a0 - 1.0) * np.log(mu) - b0 * mu)
                         + np.sum((a1 - 1.0) * np.log(Wo) - b1 * Wo))


def responsibilities(params: HawkesParams, seq: EventSequence):
    """Branching-structure posterior: background probability per event, and per source group.

    Returns ``(p_background, p_parent_group)`` with shapes ``(N,)`` and ``(N, K)``;
    each event's probabilities sum to 1.
    """
    check_sequence(seq, params.K)
    prob = _Problem(seq, params.beta)
    exc = prob.excitation(params.W)
    lam = params.mu[prob.marks] + exc.sum(axis=1)
    return params.mu[prob.marks] / lam, exc / lam[:, None]


def penalized_log_likelihood(params: HawkesParams, seq: EventSequence, config: FitConfig) -> float:
    """Log-likelihood plus gamma log-prior terms (rows of unobserved source groups excluded)."""
    prob = _Problem(seq, params.beta)
    return prob.loglik(params.mu, params.W) + prob.penalty(params.mu, params.W, config)


def em_fit(seq: EventSequence, config: FitConfig | None = None, beta: float | None = None) -> FitResult:
    """MAP-EM fit of one sequence at a fixed decay ``beta``.

    Weight rows of groups with no events in the sequence are unidentified and
    are reported as zero; they are skipped by :func:`aggregate`.
    """
    config = config or FitConfig()
    beta = config.beta_grid[0] if beta is None else check_positive(beta, "beta")
    check_sequence(seq)
    a0, b0 = config.mu_prior
    a1, b1 = config.w_prior
    prob = _Problem(seq, beta)
    K, T, marks = prob.K, prob.T, prob.marks

    mu = (prob.counts + a0 - 1.0) / (2.0 * (T + b0))
    W = np.where(prob.observed[:, None], 0.1, 0.0) * np.ones((K, K))

    exc = prob.excitation(W)
    lam = mu[marks] + exc.sum(axis=1)
    obj = prob.loglik(mu, W, lam) + prob.penalty(mu, W, config)
    history = [obj]
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise FloatingPointError(
                f"EM on {seq.url!r}: non-positive total intensity at iteration {it}; "
                "responsibilities cannot be normalized"
            )
        p0 = mu[marks] / lam
        P = exc / lam[:, None]
        mu = (a0 - 1.0 + np.bincount(marks, weights=p0, minlength=K)) / (b0 + T)
        parent_mass = P.T @ prob.onehot  # [s, d] expected direct offspring counts
        W = (a1 - 1.0 + parent_mass) / (b1 + prob.exposure[:, None])
        W[~prob.observed] = 0.0

        exc = prob.excitation(W)
        lam = mu[marks] + exc.sum(axis=1)
        new_obj = prob.loglik(mu, W, lam) + prob.penalty(mu, W, config)
        history.append(new_obj)
        if abs(new_obj - obj) <= config.tol * abs(obj):
            obj = new_obj
            converged = True
            break
        obj = new_obj

    params = HawkesParams(mu, W, beta)
    return FitResult(
        params=params,
        loglik=prob.loglik(mu, W, lam),
        penalized_loglik=obj,
        iterations=it,
        converged=converged,
        n_events_per_group=prob.counts.copy(),
        degenerate=len(marks) < config.min_events_full_fit,
        history=tuple(history),
        url=seq.url,
        category=seq.category,
    )


def select_beta(seq: EventSequence, config: FitConfig | None = None) -> tuple[float, FitResult]:
    """Fit every grid decay; keep the best penalized likelihood, ties going to the smaller decay."""
    config = config or FitConfig()
    best = None
    for beta in sorted(config.beta_grid):
        res = em_fit(seq, config, beta)
        if best is None or res.penalized_loglik > best[1].penalized_loglik + BETA_TIE:
            best = (beta, res)
    return best


def _fit_one(args) -> FitResult:
    seq, config = args
    try:
        return select_beta(seq, config)[1]
    except Exception as exc:  # recorded per sequence, never aborts the corpus
        logger.warning("fit failed for %s: %s", seq.url, exc)
        return FitResult(None, math.nan, math.nan, 0, False, seq.counts(), len(seq.events) < config.min_events_full_fit,
                         url=seq.url, category=seq.category, error=f"{type(exc).__name__}: {exc}")


def fit_corpus(sequences: Sequence[EventSequence], config: FitConfig | None = None, n_jobs: int = 1) -> list[FitResult]:
    """Fit each sequence independently; results keep input order and do not depend on ``n_jobs``."""
    config = config or FitConfig()
    work = [(seq, config) for seq in sequences]
    if n_jobs is None or n_jobs <= 1 or len(work) < 2:
        return [_fit_one(w) for w in work]
    chunk = max(1, len(work) // (4 * n_jobs))
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(_fit_one, work, chunksize=chunk))


@dataclass
class AggregateResult:
    """Per-category means of per-URL fits.

    An entry is averaged over the fits in which it is identified: ``mu[k]``
    needs at least one event in group ``k``, ``W[s, d]`` at least one event in
    source group ``s``. Entries with no retained fit are NaN; a category with
    no retained fit at all is listed in ``empty``.
    """

    groups: tuple[str, ...]
    mean_W: dict[str, np.ndarray]
    mean_mu: dict[str, np.ndarray]
    weight_samples: dict[str, list[list[list[float]]]]
    mu_samples: dict[str, list[list[float]]]
    n_fits: dict[str, int]
    empty: tuple[str, ...] = field(default=())

    @property
    def K(self) -> int:
        return len(self.groups)

    def to_dict(self) -> dict:
        def mat(a):
            return [[_json_float(x) for x in row] for row in np.atleast_2d(a)]

        return {
            "groups": list(self.groups),
            "mean_W": {c: mat(w) for c, w in self.mean_W.items()},
            "mean_mu": {c: [_json_float(x) for x in m] for c, m in self.mean_mu.items()},
            "weight_samples": self.weight_samples,
            "mu_samples": self.mu_samples,
            "n_fits": self.n_fits,
            "empty": list(self.empty),
        }

    @classmethod
    def from_dict(cls, d) -> "AggregateResult":
        def arr(x):
            return np.array([[math.nan if v is None else v for v in row] for row in x], dtype=float)

        return cls(
            groups=tuple(d["groups"]),
            mean_W={c: arr(w) for c, w in d["mean_W"].items()},
            mean_mu={c: np.array([math.nan if v is None else v for v in m], dtype=float)
                     for c, m in d["mean_mu"].items()},
            weight_samples=d["weight_samples"],
            mu_samples=d["mu_samples"],
            n_fits=d["n_fits"],
            empty=tuple(d.get("empty", ())),
        )


def aggregate(fits: Sequence[FitResult], groups: Sequence[str] | None = None,
              categories: Sequence[Category] | None = None, include_degenerate: bool = False) -> AggregateResult:
    """Average per-URL fits per category (All, RussianState, OtherNews).

    ``categories`` optionally overrides each fit's own category tag, index-aligned with ``fits``.
    """
    fits = list(fits)
    if categories is not None:
        if len(categories) != len(fits):
            raise ValueError("categories must align with fits")
        tags = [Category(c) for c in categories]
    else:
        tags = [Category(f.category) for f in fits]
    K = None
    for f in fits:
        if f.ok:
            K = f.params.K
            break
    if groups is None:
        groups = tuple(f"g{k}" for k in range(K or 0))
    groups = tuple(groups)
    K = len(groups) if K is None else K
    if len(groups) != K:
        raise ValueError(f"{len(groups)} group labels for K={K} fits")

    mean_W, mean_mu, w_samples, mu_samples, n_fits, empty = {}, {}, {}, {}, {}, []
    for cat in AGGREGATE_CATEGORIES:
        kept = [f for f, tag in zip(fits, tags)
                if f.ok and (include_degenerate or not f.degenerate)
                and (cat == "All" or tag.value == cat)]
        n_fits[cat] = len(kept)
        ws = [[[] for _ in range(K)] for _ in range(K)]
        ms = [[] for _ in range(K)]
        for f in kept:
            n = f.n_events_per_group
            for k in range(K):
                if n[k] > 0:
                    ms[k].append(float(f.params.mu[k]))
            for s in range(K):
                if n[s] > 0:
                    for d in range(K):
                        ws[s][d].append(float(f.params.W[s, d]))
        mean_W[cat] = np.array([[np.mean(ws[s][d]) if ws[s][d] else math.nan for d in range(K)]
                                for s in range(K)]).reshape(K, K)
        mean_mu[cat] = np.array([np.mean(m) if m else math.nan for m in ms])
        w_samples[cat] = ws
        mu_samples[cat] = ms
        if not kept:
            empty.append(cat)
    return AggregateResult(groups, mean_W, mean_mu, w_samples, mu_samples, n_fits, tuple(empty))
