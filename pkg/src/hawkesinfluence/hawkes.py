"""Multivariate Hawkes process with a shared exponential kernel.

The kernel from a source-group event to a destination group ``d`` is
``W[s, d] * beta * exp(-beta * dt)``; it integrates to ``W[s, d]``, so each
weight is the expected number of direct offspring in ``d`` per event in ``s``.
Time is in the caller's unit (hours by default), ``mu`` in events per unit
and ``beta`` in 1/unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .events import Event, EventSequence, GroupId, make_groups
from .exceptions import SupercriticalError
from .urls import Category
from .validation import check_int, check_positive, check_square, check_vector

__all__ = [
    "HawkesParams",
    "SimulationSpec",
    "Stability",
    "TIE_EPSILON",
    "strict_times",
    "excitation_state",
    "intensity",
    "compensator",
    "log_likelihood",
    "spectral_radius",
    "stability",
    "stationary_rates",
    "rescaled_intervals",
    "simulate",
]

TIE_EPSILON = 1e-9


@dataclass(frozen=True)
class HawkesParams:
    mu: np.ndarray
    W: np.ndarray
    beta: float = 1.0

    def __post_init__(self):
        mu = check_vector(self.mu, "mu")
        W = check_square(self.W, "W", size=mu.shape[0])
        mu.setflags(write=False)
        W.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "beta", check_positive(self.beta, "beta"))

    @property
    def K(self) -> int:
        return self.mu.shape[0]

    def to_dict(self) -> dict:
        return {"mu": self.mu.tolist(), "W": self.W.tolist(), "beta": self.beta}

    @classmethod
    def from_dict(cls, d: Mapping) -> "HawkesParams":
        return cls(np.asarray(d["mu"], dtype=float), np.asarray(d["W"], dtype=float),
                   float(d.get("beta", 1.0)))


@dataclass(frozen=True)
class SimulationSpec:
    params: HawkesParams
    horizon_T: float
    seed: int
    allow_supercritical: bool = False

    def __post_init__(self):
        check_positive(self.horizon_T, "horizon_T")
        check_int(self.seed, "seed")


@dataclass(frozen=True)
class Stability:
    spectral_radius: float
    subcritical: bool


def strict_times(times) -> np.ndarray:
    """Break exact timestamp ties by nudging later duplicates forward in input order."""
    t = np.array(times, dtype=float)
    for i in range(1, t.shape[0]):
        if t[i] <= t[i - 1]:
            t[i] = t[i - 1] + TIE_EPSILON
    return t


def _arrays(seq: EventSequence):
    return strict_times(seq.times), seq.marks


def excitation_state(times, marks, K: int, beta: float) -> np.ndarray:
    """Per-event decayed counts of earlier events by group.

    Row ``i`` holds ``A[i, s] = sum_{j < i, g_j = s} exp(-beta * (t_i - t_j))``;
    times must be strictly increasing.
    """
    n = len(times)
    A = np.empty((n, K))
    state = [0.0] * K
    prev = 0.0
    exp = math.exp
    for i in range(n):
        t = float(times[i])
        decay = exp(-beta * (t - prev))
        for s in range(K):
            state[s] *= decay
        A[i] = state
        state[marks[i]] += 1.0
        prev = t
    return A


def _check_time(seq: EventSequence, t: float):
    if not 0.0 <= t <= seq.window_T:
        raise ValueError(f"t={t} outside the observation window [0, {seq.window_T}]")


def intensity(params: HawkesParams, seq: EventSequence, t: float, k: int | GroupId) -> float:
    """Conditional intensity of group ``k`` at ``t`` from events strictly before ``t``."""
    _check_time(seq, t)
    k = k.index if isinstance(k, GroupId) else int(k)
    times, marks = _arrays(seq)
    before = times < t
    lags = t - times[before]
    return float(params.mu[k] + params.beta * np.sum(params.W[marks[before], k] * np.exp(-params.beta * lags)))


def compensator(params: HawkesParams, seq: EventSequence, t: float) -> np.ndarray:
    """Integrated intensity ``Lambda_k(t)`` for every group, in closed form."""
    _check_time(seq, t)
    times, marks = _arrays(seq)
    before = times < t
    mass = 1.0 - np.exp(-params.beta * (t - times[before]))
    return params.mu * t + mass @ params.W[marks[before]]


def log_likelihood(params: HawkesParams, seq: EventSequence, T: float | None = None) -> float:
    """Point-process log-likelihood on ``[0, T]``.

    Returns ``-inf`` when some event has zero intensity (for instance a zero
    background rate with no earlier excitation); callers treat that as a
    degenerate likelihood rather than an error.
    """
    if len(seq.events) == 0:
        raise ValueError("log_likelihood needs at least one event")
    times, marks = _arrays(seq)
    T = seq.window_T if T is None else float(T)
    if T < seq.times[-1]:
        raise ValueError(f"T={T} precedes the last event at {seq.times[-1]}")
    T = max(T, float(times[-1]))
    A = excitation_state(times, marks, params.K, params.beta)
    lam = params.mu[marks] + params.beta * np.einsum("is,is->i", A, params.W[:, marks].T)
    if np.any(lam <= 0):
        return -math.inf
    mass = 1.0 - np.exp(-params.beta * (T - times))
    comp = params.mu.sum() * T + mass @ params.W[marks].sum(axis=1)
    return float(np.sum(np.log(lam)) - comp)


def _strong_components(W: np.ndarray) -> list[np.ndarray]:
    """Index sets of the cyclic strongly connected components of ``W > 0``."""
    R = W > 0
    while True:
        nxt = R | ((R.astype(np.int64) @ R.astype(np.int64)) > 0)
        if np.array_equal(nxt, R):
            break
        R = nxt
    seen = np.zeros(len(W), bool)
    comps = []
    for i in range(len(W)):
        if seen[i] or not R[i, i]:
            continue
        members = np.flatnonzero(R[i] & R[:, i])
        seen[members] = True
        comps.append(members)
    return comps


def _irreducible_radius(M: np.ndarray, tol: float, max_iter: int) -> float:
    # M + I is primitive, so its Perron root is the unique dominant eigenvalue
    A = M + np.eye(len(M))
    x = np.ones(len(M))
    for _ in range(max_iter):
        y = A @ x
        ratios = y / x
        upper, lower = ratios.max(), ratios.min()
        if upper - lower <= tol * upper:
            break
        x = y / y.max()
    return float(0.5 * (upper + lower) - 1.0)


def spectral_radius(W, tol: float = 1e-9, max_iter: int = 1_000_000) -> float:
    """Perron root of a non-negative matrix by power iteration.

    The root is the largest over the cyclic strongly connected blocks of the
    support graph; acyclic parts contribute nothing. Each block is iterated
    as ``block + I`` until the Collatz-Wielandt bounds agree to ``tol``
    relative, which also handles periodic blocks.
    """
    W = check_square(W, "W")
    comps = _strong_components(W)
    if not comps:
        return 0.0
    return max(_irreducible_radius(W[np.ix_(c, c)], tol, max_iter) for c in comps)


def stability(params) -> Stability:
    W = params.W if isinstance(params, HawkesParams) else params
    rho = spectral_radius(W)
    return Stability(rho, rho < 1.0)


def stationary_rates(params: HawkesParams) -> np.ndarray:
    """Long-run event rate per group, ``(I - W^T)^{-1} mu``."""
    st = stability(params)
    if not st.subcritical:
        raise SupercriticalError(st.spectral_radius, "stationary rates")
    return np.linalg.solve(np.eye(params.K) - params.W.T, params.mu)


def rescaled_intervals(params: HawkesParams, seq: EventSequence) -> np.ndarray:
    """Compensator increments of the pooled process between consecutive events.

    Under the true parameters these are i.i.d. Exp(1).
    """
    times, marks = _arrays(seq)
    A = excitation_state(times, marks, params.K, params.beta)
    # total compensator at each event: mu.sum()*t + sum_j Wrow_j (1 - exp(-beta (t - t_j)))
    row_tot = params.W.sum(axis=1)
    n = times.shape[0]
    totals = np.empty(n)
    cum_mass = 0.0  # sum over earlier events of row_tot[g_j]
    for i in range(n):
        decayed = float(A[i] @ row_tot)
        totals[i] = params.mu.sum() * times[i] + cum_mass - decayed
        cum_mass += row_tot[marks[i]]
    return np.diff(np.concatenate([[0.0], totals]))


class _UniformStream:
    """Uniform [0, 1) draws from a seeded generator, fetched in blocks."""

    def __init__(self, seed, block: int = 4096):
        self._rng = np.random.default_rng(seed)
        self._block = block
        self._buf: list[float] = []
        self._i = 0

    def next(self) -> float:
        if self._i == len(self._buf):
            self._buf = self._rng.random(self._block).tolist()
            self._i = 0
        self._i += 1
        return self._buf[self._i - 1]


def _pick(weights, u: float) -> int:
    """Index whose cumulative-weight bin contains ``u`` (last positive bin on round-off)."""
    acc = 0.0
    last = 0
    for i, w in enumerate(weights):
        if w > 0.0:
            acc += w
            last = i
            if u < acc:
                return i
    return last


def simulate(spec: SimulationSpec, labels: Sequence[str] | None = None, url: str = "simulated",
             category: Category = Category.OTHER) -> EventSequence:
    """Draw one sequence on ``[0, horizon_T)`` by Ogata's modified thinning.

    Each accepted event records the group of its latent parent in
    ``Event.parent_group`` (-1 for a background event), sampled from the
    contributions to the intensity at the acceptance time.
    """
    params = spec.params
    K = params.K
    st = stability(params)
    if not st.subcritical and not spec.allow_supercritical:
        raise SupercriticalError(st.spectral_radius, "simulate")
    groups = make_groups(labels if labels is not None else [f"g{k}" for k in range(K)], min_groups=1)
    if len(groups) != K:
        raise ValueError(f"{len(groups)} labels for {K} groups")

    uniforms = _UniformStream(spec.seed)
    # plain floats: K is small, so per-event numpy calls would dominate
    mu = [float(x) for x in params.mu]
    W = params.W.tolist()
    cols = params.W.T.tolist()
    beta, T = float(params.beta), float(spec.horizon_T)
    jump = [beta * sum(row) for row in W]
    S = [0.0] * K  # beta-scaled decayed event counts per source group
    t = t_last = 0.0
    bound = sum(mu)
    events: list[Event] = []
    while bound > 0.0:
        t -= math.log(1.0 - uniforms.next()) / bound
        if t >= T:
            break
        decay = math.exp(-beta * (t - t_last))
        S = [x * decay for x in S]
        t_last = t
        lam = [m + sum([a * b for a, b in zip(S, col)]) for m, col in zip(mu, cols)]
        total = sum(lam)
        u = uniforms.next() * bound
        if u >= total:
            bound = total
            continue
        d = _pick(lam, u)
        v = uniforms.next() * lam[d]
        if v < mu[d]:
            parent = -1
        else:
            parent = _pick([a * b for a, b in zip(S, cols[d])], v - mu[d])
        events.append(Event(groups[d], t, None, parent))
        S[d] += beta
        bound = total + jump[d]
    return EventSequence(url, category, tuple(events), float(T), groups)
