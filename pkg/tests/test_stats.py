from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hawkesinfluence.stats import ecdf, kolmogorov_sf, ks_two_sample


def brute_ecdf(samples, x):
    return Fraction(sum(1 for s in samples if s <= x), len(samples))


def brute_D(a, b):
    """Exhaustive sup-gap between step ECDFs, evaluated at every pooled point."""
    points = sorted(set(a) | set(b))
    return float(max(abs(brute_ecdf(a, x) - brute_ecdf(b, x)) for x in points))


class TestEcdf:
    def test_small_counts(self):
        F = ecdf([1, 2, 3])
        assert F(2) == pytest.approx(2 / 3)
        assert F(0.5) == 0
        assert F(3) == 1

    def test_tie_mass(self):
        F = ecdf([5, 5, 5])
        assert F(5) == 1
        assert F(4.999) == 0

    def test_rank_oracle(self, rng):
        x = rng.normal(size=100)
        F = ecdf(x)
        order = np.argsort(x)
        ranks = np.empty(100)
        ranks[order] = np.arange(1, 101)
        np.testing.assert_array_equal(F(x), ranks / 100)

    def test_points_are_steps(self):
        assert ecdf([3, 1, 1]).points() == [(1.0, 2 / 3), (3.0, 1.0)]

    def test_rejects_empty_and_nan(self):
        with pytest.raises(ValueError):
            ecdf([])
        with pytest.raises(ValueError):
            ecdf([1.0, float("nan")])


class TestKs:
    def test_identical(self):
        res = ks_two_sample([1, 2, 3], [1, 2, 3])
        assert res.D == 0 and res.p == 1

    def test_disjoint(self):
        assert ks_two_sample([1, 2, 3, 4], [5, 6, 7, 8]).D == 1

    def test_hand_enumerated(self):
        assert ks_two_sample([1, 2], [1.5, 2.5]).D == 0.5

    def test_point_masses(self):
        res = ks_two_sample([0.1] * 50, [0.2] * 50)
        assert res.D == 1
        assert res.p < 1e-6

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ks_two_sample([], [1.0])

    def test_exhaustive_small_alphabet(self):
        alphabet = (0.0, 1.0, 2.0)
        samples = [s for n in range(1, 4) for s in product(alphabet, repeat=n)]
        for a in samples:
            for b in samples:
                assert ks_two_sample(a, b).D == brute_D(a, b)

    def test_pvalue_matches_reference_series(self):
        from scipy.special import kolmogorov

        for lam in (0.25, 0.5, 0.8, 1.0, 1.36, 2.0, 3.0):
            assert kolmogorov_sf(lam) == pytest.approx(kolmogorov(lam), abs=1e-12)

    @given(st.lists(st.integers(-5, 5), min_size=1, max_size=12),
           st.lists(st.integers(-5, 5), min_size=1, max_size=12))
    def test_symmetry(self, a, b):
        assert ks_two_sample(a, b).D == ks_two_sample(b, a).D

    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=15),
           st.lists(st.floats(-10, 10), min_size=1, max_size=15))
    @settings(max_examples=200)
    def test_monotone_transform_invariance(self, a, b):
        f = np.arctan  # strictly increasing
        assert ks_two_sample(a, b).D == ks_two_sample(f(np.array(a)), f(np.array(b))).D

    def test_calibration(self):
        rng = np.random.default_rng(5)
        rejections = sum(ks_two_sample(rng.normal(size=100), rng.normal(size=100)).p < 0.05
                         for _ in range(1000))
        assert 0.03 <= rejections / 1000 <= 0.08
