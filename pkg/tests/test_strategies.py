"""Selection policies: worked values, tie rules, allocation arithmetic."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from hpybandit.crf import CrfState
from hpybandit.reward import RewardDraw
from hpybandit.smc import Particle, ParticleSet
from hpybandit.strategies import (
    GT_FLOOR,
    Allocation,
    FreqOfFreq,
    argmax_tiebreak,
    gt_estimate,
    gtts_select,
    hpyts_allocate_delayed,
    hpyts_select,
    largest_remainder,
    oracle_select,
    uniform_select,
)

from conftest import make_params


def lopsided_cloud(n=20):
    """Arm 0 saw one species over and over; arm 1 saw only singletons."""
    params = make_params(2, sigma=0.5, theta=1.0)
    state = CrfState(2)
    rng = np.random.default_rng(0)
    for _ in range(10):
        state.seat(0, "common", params, rng=rng)
    for i in range(10):
        state.seat(1, f"rare{i}", params, rng=rng)
    return ParticleSet(
        [Particle(eta=params, state=state.copy(), weight=1.0) for _ in range(n)]
    )


class TestAllocation:
    def test_budget_and_validation(self):
        a = Allocation((2, 0, 3))
        assert a.budget == 5
        with pytest.raises(ValueError):
            Allocation((1, -1))
        with pytest.raises(ValueError):
            Allocation(())

    def test_incidence_shape(self):
        a = Allocation((0, 4, 0), chosen_arm=1)
        assert a.budget == 4
        with pytest.raises(ValueError):
            Allocation((1, 3), chosen_arm=1)
        with pytest.raises(ValueError):
            Allocation((0, 4), chosen_arm=2)


class TestFreqOfFreq:
    def test_from_counts(self):
        f = FreqOfFreq.from_counts({"a": 3, "b": 1, "c": 1, "d": 0})
        assert f.phi == {3: 1, 1: 2}
        assert f.n == 5

    def test_rejects_bad_entries(self):
        with pytest.raises(ValueError):
            FreqOfFreq({0: 2})
        with pytest.raises(ValueError):
            FreqOfFreq({1: -1})
        with pytest.raises(ValueError):
            FreqOfFreq.from_counts({"a": -2})


class TestArgmaxTiebreak:
    def test_plain_argmax(self):
        rng = np.random.default_rng(0)
        assert argmax_tiebreak([0.1, 2.0, 1.5], rng) == 1

    def test_uniform_over_ties(self):
        rng = np.random.default_rng(1)
        picks = np.array(
            [argmax_tiebreak([3.2, 1.1, 3.2], rng) for _ in range(2000)]
        )
        assert set(picks) == {0, 2}
        assert abs((picks == 0).mean() - 0.5) < 0.05

    def test_scale_invariance(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            v = rng.uniform(0.1, 5.0, size=6)
            s1 = argmax_tiebreak(v, np.random.default_rng(9))
            s2 = argmax_tiebreak(7.5 * v, np.random.default_rng(9))
            assert s1 == s2


class TestLargestRemainder:
    def test_exact_proportionality(self):
        assert largest_remainder([2.0, 1.0, 1.0], 4, np.random.default_rng(0)) == (2, 1, 1)

    def test_remainder_tie_coin(self):
        outcomes = {
            largest_remainder([1.0, 1.0], 3, np.random.default_rng(s)) for s in range(40)
        }
        assert outcomes == {(2, 1), (1, 2)}

    def test_zero_weights_fall_back_to_equal_split(self):
        assert largest_remainder([0.0] * 4, 4, np.random.default_rng(0)) == (1, 1, 1, 1)

    def test_sums_to_budget(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            w = rng.uniform(0.0, 4.0, size=rng.integers(1, 8))
            m = int(rng.integers(0, 50))
            assert sum(largest_remainder(w, m, rng)) == m


class TestHpyTs:
    def test_single_arm_always_zero(self):
        params = make_params(1)
        state = CrfState(1)
        state.seat(0, "a", params, u=0.0)
        ps = ParticleSet([Particle(eta=params, state=state.copy(), weight=1.0) for _ in range(4)])
        arm, draw = hpyts_select(ps, 5, np.random.default_rng(0))
        assert arm == 0
        assert isinstance(draw, RewardDraw)
        assert draw.expected_new.shape == (1,)

    def test_prefers_diverse_arm(self):
        ps = lopsided_cloud()
        hits = sum(
            hpyts_select(ps, 10, np.random.default_rng(s))[0] == 1 for s in range(60)
        )
        assert hits > 45

    def test_seeded_determinism(self):
        ps = lopsided_cloud()
        a1, d1 = hpyts_select(ps, 10, np.random.default_rng(7))
        a2, d2 = hpyts_select(ps, 10, np.random.default_rng(7))
        assert a1 == a2
        assert_allclose(d1.expected_new, d2.expected_new, atol=0.0)

    def test_rejects_zero_budget(self):
        with pytest.raises(ValueError):
            hpyts_select(lopsided_cloud(), 0, np.random.default_rng(0))


class TestDelayedAllocation:
    def test_sums_to_budget_and_leans_diverse(self):
        ps = lopsided_cloud()
        totals = np.zeros(2)
        for s in range(30):
            alloc, _ = hpyts_allocate_delayed(ps, 20, np.random.default_rng(s))
            assert alloc.budget == 20
            assert alloc.chosen_arm is None
            totals += alloc.counts
        assert totals[1] > totals[0]


class TestGoodToulmin:
    def test_vacuous_table(self):
        assert gt_estimate(FreqOfFreq({}), 5) == 0.0

    def test_single_singleton(self):
        f = FreqOfFreq({1: 1})
        assert_allclose(gt_estimate(f, 1, smoothing="none"), 1.0, atol=1e-12)

    def test_worked_partial_sum(self):
        # phi_1=2, phi_2=1, n=4, M=2: -((-0.5)*2 + 0.25*1) = 0.75
        f = FreqOfFreq({1: 2, 2: 1})
        assert f.n == 4
        assert_allclose(gt_estimate(f, 2, smoothing="none"), 0.75, atol=1e-12)
        # t <= 1 leaves the binomial mode unsmoothed
        assert_allclose(gt_estimate(f, 2, smoothing="binomial"), 0.75, atol=1e-12)

    def test_binomial_smoothing_matches_direct_sum(self):
        # n=10, M=30, t=3: k = ceil(.5*log2(10*9/2)) = 3, q = 0.4
        f = FreqOfFreq({1: 3, 2: 2, 3: 1})
        assert f.n == 10
        k, q = 3, 0.4
        direct = 0.0
        for i, phi in f.phi.items():
            tail = sum(
                math.comb(k, l) * q**l * (1 - q) ** (k - l) for l in range(i, k + 1)
            )
            direct -= (-3.0) ** i * tail * phi
        got = gt_estimate(f, 30, smoothing="binomial")
        assert_allclose(got, direct, rtol=1e-12)
        assert_allclose(got, 2.448, atol=1e-12)

    def test_clamped_to_budget_and_zero(self):
        # unsmoothed t > 1 oscillates; clamps keep the result usable
        f = FreqOfFreq({2: 1})
        assert gt_estimate(f, 2, smoothing="none") == 0.0  # raw value -1
        g = FreqOfFreq({1: 50})
        assert gt_estimate(g, 10, smoothing="none") <= 10.0

    def test_rejects_unknown_smoothing(self):
        with pytest.raises(ValueError):
            gt_estimate(FreqOfFreq({1: 1}), 2, smoothing="laplace")


class TestGtTs:
    def test_dominant_arm_wins(self):
        fs = [FreqOfFreq({1: 1}), FreqOfFreq({2: 1}), FreqOfFreq({2: 1})]
        picks = np.array(
            [gtts_select(fs, 1, np.random.default_rng(s), "none") for s in range(300)]
        )
        assert (picks == 0).mean() > 0.99

    def test_equal_estimates_split_evenly(self):
        fs = [FreqOfFreq({1: 1}), FreqOfFreq({1: 1})]
        picks = np.array(
            [gtts_select(fs, 1, np.random.default_rng(s), "none") for s in range(400)]
        )
        assert abs((picks == 0).mean() - 0.5) < 0.08

    def test_all_zero_estimates_fall_back_to_floor(self):
        fs = [FreqOfFreq({2: 1}), FreqOfFreq({2: 1})]
        for f in fs:
            assert gt_estimate(f, 2, smoothing="none") == 0.0
        picks = np.array(
            [gtts_select(fs, 2, np.random.default_rng(s), "none") for s in range(400)]
        )
        assert abs((picks == 0).mean() - 0.5) < 0.08

    def test_requires_observations_everywhere(self):
        with pytest.raises(ValueError, match="arm 1"):
            gtts_select([FreqOfFreq({1: 1}), FreqOfFreq({})], 1, np.random.default_rng(0))


class TestOracle:
    def test_picks_largest_unseen_mass(self):
        dists = [{"a": 0.5, "b": 0.5}, {"a": 0.8, "c": 0.2}]
        assert oracle_select(dists, {"a"}, np.random.default_rng(0)) == 0

    def test_identical_unseen_masses_tiebreak(self):
        dists = [{"a": 1.0}, {"b": 1.0}]
        picks = {oracle_select(dists, set(), np.random.default_rng(s)) for s in range(30)}
        assert picks == {0, 1}

    def test_everything_seen(self):
        dists = [{"a": 1.0}, {"b": 1.0}]
        picks = {
            oracle_select(dists, {"a", "b"}, np.random.default_rng(s)) for s in range(30)
        }
        assert picks == {0, 1}


class TestUniform:
    def test_single_arm(self):
        assert uniform_select(1, np.random.default_rng(0)) == 0

    def test_frequencies_uniform(self):
        rng = np.random.default_rng(5)
        draws = np.array([uniform_select(4, rng) for _ in range(100_000)])
        counts = np.bincount(draws, minlength=4)
        assert stats.chisquare(counts).pvalue > 0.05

    def test_seeded_determinism(self):
        assert uniform_select(10, np.random.default_rng(3)) == uniform_select(
            10, np.random.default_rng(3)
        )

    def test_rejects_no_arms(self):
        with pytest.raises(ValueError):
            uniform_select(0, np.random.default_rng(0))
