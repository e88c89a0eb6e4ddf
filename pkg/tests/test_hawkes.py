import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hawkesinfluence.exceptions import SupercriticalError
from hawkesinfluence.hawkes import (
    HawkesParams,
    SimulationSpec,
    compensator,
    intensity,
    log_likelihood,
    rescaled_intervals,
    simulate,
    spectral_radius,
    stability,
    stationary_rates,
    strict_times,
)
from tests.conftest import make_sequence


def direct_intensity(mu, W, beta, times, marks, grid):
    """Brute-force lambda(t) on a grid: explicit sum over strictly earlier events."""
    grid = np.asarray(grid)[:, None]
    out = np.tile(np.asarray(mu, float), (grid.shape[0], 1))
    for tj, gj in zip(times, marks):
        before = grid[:, 0] > tj
        out[before] += np.outer(np.exp(-beta * (grid[before, 0] - tj)), W[gj] * beta)
    return out


def trapezoid(y, h):
    return h * (y.sum(axis=0) - 0.5 * (y[0] + y[-1]))


def one_dim(mu=0.5, w=0.4, beta=1.0):
    return HawkesParams(np.array([mu]), np.array([[w]]), beta)


class TestIntensity:
    def test_background_only(self):
        p = HawkesParams(np.array([0.3, 0.7]), np.zeros((2, 2)))
        seq = make_sequence([0.0, 1.0, 2.5], [0, 1, 1], 5.0)
        for t in (0.0, 0.5, 2.5, 4.9):
            assert intensity(p, seq, t, 1) == 0.7

    def test_single_event(self):
        seq = make_sequence([0.0], [0], 3.0)
        assert intensity(one_dim(), seq, 1.0, 0) == pytest.approx(0.5 + 0.4 * math.exp(-1), abs=1e-12)
        assert intensity(one_dim(), seq, 1.0, 0) == pytest.approx(0.6472, abs=1e-4)

    def test_two_events(self):
        seq = make_sequence([0.0, 1.0], [0, 0], 3.0)
        lam = intensity(one_dim(), seq, 2.0, 0)
        assert lam == pytest.approx(0.5 + 0.4 * (math.exp(-2) + math.exp(-1)), abs=1e-12)
        assert lam == pytest.approx(0.7013, abs=1e-4)

    def test_strictly_before(self):
        seq = make_sequence([1.0], [0], 3.0)
        assert intensity(one_dim(), seq, 1.0, 0) == 0.5
        assert intensity(one_dim(), seq, 1.0 + 1e-12, 0) == pytest.approx(0.9)

    def test_out_of_window(self):
        seq = make_sequence([1.0], [0], 3.0)
        with pytest.raises(ValueError):
            intensity(one_dim(), seq, 3.5, 0)
        with pytest.raises(ValueError):
            intensity(one_dim(), seq, -0.1, 0)

    def test_matches_direct_sum(self, rng):
        K = 3
        p = HawkesParams(rng.uniform(0.1, 1, K), rng.uniform(0, 0.3, (K, K)), 1.7)
        times = np.sort(rng.uniform(0, 10, 25))
        marks = rng.integers(0, K, 25)
        seq = make_sequence(times, marks, 10.0)
        grid = rng.uniform(0, 10, 40)
        ref = direct_intensity(p.mu, p.W, p.beta, times, marks, grid)
        got = np.array([[intensity(p, seq, t, k) for k in range(K)] for t in grid])
        np.testing.assert_allclose(got, ref, rtol=1e-12)

    @given(st.lists(st.floats(0, 9.9), min_size=1, max_size=8, unique=True),
           st.lists(st.floats(0, 9.9), min_size=1, max_size=8, unique=True),
           st.floats(0, 10))
    @settings(max_examples=100, deadline=None)
    def test_additivity(self, a, b, t):
        if set(a) & set(b):
            return
        p = HawkesParams(np.array([0.2, 0.6]), np.array([[0.3, 0.1], [0.2, 0.4]]), 1.3)
        ma = [i % 2 for i in range(len(a))]
        mb = [(i + 1) % 2 for i in range(len(b))]
        both = sorted(zip(a + b, ma + mb))
        sa = make_sequence(sorted(a), [m for _, m in sorted(zip(a, ma))], 10.0, ["x", "y"])
        sb = make_sequence(sorted(b), [m for _, m in sorted(zip(b, mb))], 10.0, ["x", "y"])
        sab = make_sequence([x for x, _ in both], [m for _, m in both], 10.0, ["x", "y"])
        for k in range(2):
            lhs = intensity(p, sab, t, k)
            rhs = intensity(p, sa, t, k) + intensity(p, sb, t, k) - p.mu[k]
            assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


class TestLikelihood:
    def test_poisson_case(self):
        mu = np.array([0.4, 1.3])
        p = HawkesParams(mu, np.zeros((2, 2)))
        seq = make_sequence([0.0, 0.5, 2.0, 3.0, 3.5], [0, 1, 1, 0, 1], 6.0)
        expected = 2 * math.log(0.4) + 3 * math.log(1.3) - mu.sum() * 6.0
        assert log_likelihood(p, seq) == pytest.approx(expected, abs=1e-12)

    def test_hand_example(self):
        seq = make_sequence([0.0, 1.0], [0, 0], 2.0)
        expected = (math.log(0.5) + math.log(0.5 + 0.4 * math.exp(-1))
                    - (0.5 * 2 + 0.4 * (1 - math.exp(-2)) + 0.4 * (1 - math.exp(-1))))
        assert log_likelihood(one_dim(), seq, 2.0) == pytest.approx(expected, abs=1e-12)
        assert log_likelihood(one_dim(), seq, 2.0) == pytest.approx(-2.73, abs=5e-3)

    def test_zero_intensity_sentinel(self):
        p = HawkesParams(np.array([0.0, 1.0]), np.zeros((2, 2)))
        seq = make_sequence([0.0, 1.0], [0, 1], 2.0)
        assert log_likelihood(p, seq) == -math.inf

    def test_T_before_last_event_rejected(self):
        seq = make_sequence([0.0, 1.0], [0, 0], 2.0)
        with pytest.raises(ValueError):
            log_likelihood(one_dim(), seq, 0.5)

    @pytest.mark.parametrize("seed", range(5))
    def test_compensator_quadrature(self, seed):
        rng = np.random.default_rng(seed)
        K = 2
        p = HawkesParams(rng.uniform(0.1, 1, K), rng.uniform(0, 0.45, (K, K)), rng.uniform(0.5, 3))
        T = 8.0
        times = np.sort(rng.uniform(0, T, 12))
        marks = rng.integers(0, K, 12)
        seq = make_sequence(times, marks, T)
        h = 1e-4
        grid = np.linspace(0, T, int(round(T / h)) + 1)
        quad = trapezoid(direct_intensity(p.mu, p.W, p.beta, times, marks, grid), h)
        np.testing.assert_allclose(compensator(p, seq, T), quad, rtol=1e-3)

    def test_strict_times(self):
        np.testing.assert_allclose(strict_times([1.0, 1.0, 1.0, 2.0]), [1.0, 1.0 + 1e-9, 1.0 + 2e-9, 2.0], rtol=0, atol=1e-15)

    def test_true_params_beat_perturbations(self):
        """Average LL at the truth exceeds every single-entry +-50% perturbation."""
        truth = HawkesParams(np.array([0.6, 0.5]), np.array([[0.2, 0.3], [0.1, 0.25]]), 1.0)
        seqs = []
        for seed in range(100):
            seq = simulate(SimulationSpec(truth, 500.0, seed))
            assert len(seq.events) >= 500
            seqs.append(seq)
        base = np.mean([log_likelihood(truth, s) for s in seqs])
        for which in ("mu", "W"):
            arr = getattr(truth, which)
            for idx in np.ndindex(arr.shape):
                for factor in (0.5, 1.5):
                    mu, W = np.array(truth.mu), np.array(truth.W)
                    (mu if which == "mu" else W)[idx] *= factor
                    q = HawkesParams(mu, W, 1.0)
                    assert base > np.mean([log_likelihood(q, s) for s in seqs]), (which, idx, factor)


class TestStability:
    def test_examples(self):
        assert spectral_radius(np.zeros((3, 3))) == 0
        assert stability(HawkesParams(np.ones(4), 0.5 * np.eye(4))).spectral_radius == pytest.approx(0.5, abs=1e-9)
        assert stability(HawkesParams(np.ones(4), 0.5 * np.eye(4))).subcritical
        assert not stability(HawkesParams(np.ones(2), np.array([[0.0, 1.0], [1.0, 0.0]]))).subcritical

    @pytest.mark.parametrize("seed", range(20))
    def test_dense_eigen_oracle(self, seed):
        W = np.random.default_rng(seed).uniform(0, 1, (4, 4))
        W[W < 0.3] = 0
        ref = max(abs(np.linalg.eigvals(W)))
        assert spectral_radius(W) == pytest.approx(ref, abs=1e-6)

    def test_nilpotent_and_periodic(self):
        assert spectral_radius(np.array([[0.0, 0.5], [0.0, 0.0]])) == pytest.approx(0.0, abs=1e-6)
        perm = np.array([[0, 0.5, 0], [0, 0, 0.5], [0.5, 0, 0]])
        assert spectral_radius(perm) == pytest.approx(0.5, abs=1e-6)

    def test_stationary_rates(self):
        p = HawkesParams(np.array([1.0]), np.array([[0.5]]))
        np.testing.assert_allclose(stationary_rates(p), [2.0])
        with pytest.raises(SupercriticalError):
            stationary_rates(HawkesParams(np.array([1.0]), np.array([[1.2]])))


class TestSimulate:
    def test_zero_background_is_empty(self):
        p = HawkesParams(np.zeros(3), np.full((3, 3), 0.2))
        assert simulate(SimulationSpec(p, 100.0, 1)).events == ()

    def test_deterministic(self):
        p = HawkesParams(np.array([0.5, 0.2]), np.array([[0.3, 0.1], [0.2, 0.2]]))
        assert simulate(SimulationSpec(p, 200.0, 7)) == simulate(SimulationSpec(p, 200.0, 7))
        assert simulate(SimulationSpec(p, 200.0, 7)) != simulate(SimulationSpec(p, 200.0, 8))

    def test_events_within_horizon(self):
        p = HawkesParams(np.array([1.0, 1.0]), np.array([[0.4, 0.2], [0.3, 0.3]]))
        seq = simulate(SimulationSpec(p, 50.0, 3))
        assert seq.times.min() >= 0 and seq.times.max() < 50.0

    def test_supercritical_refused(self):
        p = HawkesParams(np.array([1.0]), np.array([[1.5]]))
        with pytest.raises(SupercriticalError) as exc:
            simulate(SimulationSpec(p, 10.0, 0))
        assert "1.5" in str(exc.value)
        seq = simulate(SimulationSpec(p, 5.0, 0, allow_supercritical=True))
        assert len(seq.events) > 0

    def test_poisson_count(self):
        p = HawkesParams(np.array([2.0]), np.zeros((1, 1)))
        mean = np.mean([len(simulate(SimulationSpec(p, 1000.0, s)).events) for s in range(100)])
        assert abs(mean - 2000) / 2000 < 0.03

    def test_branching_rate(self):
        p = HawkesParams(np.array([1.0]), np.array([[0.5]]), 1.0)
        rate = np.mean([len(simulate(SimulationSpec(p, 5000.0, s)).events) / 5000.0 for s in range(20)])
        assert abs(rate - 2.0) / 2.0 < 0.03

    def test_parent_groups_recorded(self):
        p = HawkesParams(np.array([0.5, 0.0]), np.array([[0.0, 0.6], [0.0, 0.0]]))
        seq = simulate(SimulationSpec(p, 500.0, 2))
        for ev in seq.events:
            # group 1 has no background, so its events must be children of group 0
            assert ev.parent_group == (-1 if ev.group.index == 0 else 0)

    def test_time_rescaling_goodness_of_fit(self):
        from scipy.stats import kstest

        p = HawkesParams(np.array([0.4, 0.3]), np.array([[0.3, 0.2], [0.1, 0.4]]), 1.5)
        for seed in range(5):
            seq = simulate(SimulationSpec(p, 1500.0, seed))
            taus = rescaled_intervals(p, seq)
            assert kstest(taus, "expon").pvalue > 0.01
