"""scikit-learn compatible wrappers around the EM fitter."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_is_fitted

from .events import EventSequence
from .fit import FitConfig, aggregate, fit_corpus, select_beta
from .hawkes import log_likelihood


def _as_sequences(X) -> list[EventSequence]:
    if isinstance(X, EventSequence):
        return [X]
    seqs = list(X)
    if not all(isinstance(s, EventSequence) for s in seqs):
        raise TypeError("X must be an EventSequence or an iterable of EventSequence")
    return seqs


class _ConfigMixin:
    def _config(self) -> FitConfig:
        return FitConfig(
            beta_grid=tuple(self.beta_grid),
            max_iter=self.max_iter,
            tol=self.tol,
            mu_prior=tuple(self.mu_prior),
            w_prior=tuple(self.w_prior),
            min_events_full_fit=self.min_events_full_fit,
        )


class HawkesEM(_ConfigMixin, BaseEstimator):
    """Fit one multivariate Hawkes process to a single event sequence.

    After ``fit``: ``mu_``, ``W_``, ``beta_``, ``params_`` and ``result_``.
    """

    def __init__(self, beta_grid=(1.0,), max_iter=500, tol=1e-6, mu_prior=(1.01, 0.01),
                 w_prior=(1.01, 0.01), min_events_full_fit=3):
        self.beta_grid = beta_grid
        self.max_iter = max_iter
        self.tol = tol
        self.mu_prior = mu_prior
        self.w_prior = w_prior
        self.min_events_full_fit = min_events_full_fit

    def fit(self, X, y=None):
        seqs = _as_sequences(X)
        if len(seqs) != 1:
            raise ValueError(f"HawkesEM fits one sequence, got {len(seqs)}; use HawkesCorpusFitter")
        self.beta_, self.result_ = select_beta(seqs[0], self._config())
        self.params_ = self.result_.params
        self.mu_ = np.array(self.params_.mu)
        self.W_ = np.array(self.params_.W)
        self.n_groups_ = self.params_.K
        return self

    def score(self, X, y=None):
        """Total log-likelihood of ``X`` under the fitted parameters."""
        check_is_fitted(self, "params_")
        return float(sum(log_likelihood(self.params_, s) for s in _as_sequences(X)))


class HawkesCorpusFitter(_ConfigMixin, TransformerMixin, BaseEstimator):
    """Fit one model per sequence and aggregate per category.

    ``transform`` maps each sequence to its fitted ``[mu, W.ravel()]`` vector
    (NaN for failed fits), which makes the per-URL parameters usable as
    features downstream.
    """

    def __init__(self, beta_grid=(1.0,), max_iter=500, tol=1e-6, mu_prior=(1.01, 0.01),
                 w_prior=(1.01, 0.01), min_events_full_fit=3, include_degenerate=False, n_jobs=1):
        self.beta_grid = beta_grid
        self.max_iter = max_iter
        self.tol = tol
        self.mu_prior = mu_prior
        self.w_prior = w_prior
        self.min_events_full_fit = min_events_full_fit
        self.include_degenerate = include_degenerate
        self.n_jobs = n_jobs

    def _fit_results(self, seqs):
        return fit_corpus(seqs, self._config(), n_jobs=self.n_jobs)

    def fit(self, X, y=None):
        seqs = _as_sequences(X)
        if not seqs:
            raise ValueError("cannot fit an empty corpus")
        self.results_ = self._fit_results(seqs)
        self.groups_ = tuple(g.label for g in seqs[0].groups)
        self.aggregate_ = aggregate(self.results_, self.groups_, include_degenerate=self.include_degenerate)
        return self

    def _vectors(self, results, K):
        out = np.full((len(results), K + K * K), np.nan)
        for i, r in enumerate(results):
            if r.ok:
                out[i] = np.concatenate([r.params.mu, r.params.W.ravel()])
        return out

    def transform(self, X):
        if not hasattr(self, "results_"):
            raise NotFittedError("HawkesCorpusFitter is not fitted yet")
        seqs = _as_sequences(X)
        return self._vectors(self._fit_results(seqs), len(self.groups_))

    def fit_transform(self, X, y=None, **fit_params):
        self.fit(X)
        return self._vectors(self.results_, len(self.groups_))
