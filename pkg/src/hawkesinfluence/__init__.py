"""Cross-community influence estimation with per-URL multivariate Hawkes processes."""

from .events import Event, EventSequence, GroupId, build_sequences, make_groups
from .estimators import HawkesCorpusFitter, HawkesEM
from .fit import AggregateResult, FitConfig, FitResult, aggregate, em_fit, fit_corpus, select_beta
from .hawkes import (HawkesParams, SimulationSpec, compensator, intensity, log_likelihood, simulate,
                     spectral_radius, stability)
from .influence import compare_categories, direct_impact, total_impact
from .stats import ecdf, ks_two_sample
from .urls import Category, canonicalize_url, categorize_url

__version__ = "0.1.0"
