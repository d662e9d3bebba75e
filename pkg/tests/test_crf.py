"""Franchise seating state: predictive rule, seat/remove inverses,
arrangement probabilities, serialization."""
import json
import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpybandit.crf import (
    NEW_TABLE,
    CrfState,
    HpyParams,
    LabeledBatch,
    log_peppf,
    log_peppf_arm,
    log_peppf_root,
    state_from_batches,
)
from hpybandit.pyp import PyParams, eppf_log
from conftest import set_partitions


def make_params(n_arms, sigma=0.5, theta=1.0, arm_sigma=0.5, arm_theta=1.0):
    return HpyParams(
        root=PyParams(sigma, theta),
        arms=tuple(PyParams(arm_sigma, arm_theta) for _ in range(n_arms)),
    )


def _paths(state, seq, params, acc=1.0):
    """Enumerate every table-assignment path for a (arm, label) sequence."""
    if not seq:
        yield acc, state
        return
    (arm, label), rest = seq[0], seq[1:]
    choices, weights = state.seat_choices(arm, label, params)
    for t, w in zip(choices, weights):
        s2 = state.copy()
        s2.seat(arm, label, params, table=t)
        yield from _paths(s2, rest, params, acc * w)


class TestBasics:
    def test_empty_state(self):
        s = CrfState(3)
        assert s.n_dishes == 0
        assert s.total_tables == 0
        assert s.total_customers == 0
        s.validate()

    def test_first_seat_has_probability_one(self):
        s = CrfState(2)
        p = make_params(2)
        lp, tid = s.seat(0, "sp1", p, rng=np.random.default_rng(0))
        assert lp == pytest.approx(0.0, abs=1e-15)
        assert s.customers_eating(0, "sp1") == 1
        assert s.tables_serving(0, "sp1") == 1
        s.validate()

    def test_batch_rejects_empty(self):
        with pytest.raises(ValueError):
            LabeledBatch(0, ())

    def test_arm_out_of_range(self):
        s = CrfState(2)
        with pytest.raises(ValueError):
            s.seat_choices(2, "x", make_params(2))

    def test_params_require_arm(self):
        with pytest.raises(ValueError):
            HpyParams(root=PyParams(0.5, 1.0), arms=())


class TestSeatingRule:
    def test_same_label_second_draw(self):
        # one customer eating sp1; P(next is sp1) = 0.25 + 0.75 * 0.25
        s = CrfState(1)
        p = make_params(1)
        s.seat(0, "sp1", p, table=NEW_TABLE)
        choices, weights = s.seat_choices(0, "sp1", p)
        assert choices[-1] == NEW_TABLE
        assert len(choices) == 2
        assert weights[0] == pytest.approx(0.25, abs=1e-15)
        assert weights[1] == pytest.approx(0.1875, abs=1e-15)
        assert math.exp(s.label_log_predictive(0, "sp1", p)) == pytest.approx(
            0.4375, abs=1e-15
        )

    def test_new_label_second_draw(self):
        s = CrfState(1)
        p = make_params(1)
        s.seat(0, "sp1", p, table=NEW_TABLE)
        assert math.exp(s.label_log_predictive(0, "sp2", p)) == pytest.approx(
            0.5625, abs=1e-15
        )

    def test_label_marginals_sum_to_one(self):
        # summing the predictive over all seen labels plus the new-label mass
        rng = np.random.default_rng(3)
        s = CrfState(2)
        p = make_params(2, sigma=0.3, theta=0.8, arm_sigma=0.6, arm_theta=2.0)
        for arm, label in [(0, "a"), (0, "b"), (1, "a"), (1, "c"), (0, "a"), (1, "a")]:
            s.seat(arm, label, p, rng=rng)
        for arm in range(2):
            seen = sum(
                math.exp(s.label_log_predictive(arm, lab, p)) for lab in s.dish_labels()
            )
            new = math.exp(s.label_log_predictive(arm, "never-seen", p))
            assert seen + new == pytest.approx(1.0, abs=1e-12)

    def test_sharing_across_arms_boosts_predictive(self):
        # a label seen only in arm 1 must be more likely in arm 0 than a
        # label seen nowhere
        s = CrfState(2)
        p = make_params(2)
        s.seat(1, "shared", p, table=NEW_TABLE)
        shared = s.label_log_predictive(0, "shared", p)
        fresh = s.label_log_predictive(0, "fresh", p)
        assert shared < 0.0  # it is a probability
        # (1 - 0.5)/(1 + 1) vs (1 + 0.5)/(1 + 1) at the top level
        assert math.exp(shared) == pytest.approx(0.25, abs=1e-15)
        assert math.exp(fresh) == pytest.approx(0.75, abs=1e-15)

    def test_forced_table_must_serve_label(self):
        s = CrfState(1)
        p = make_params(1)
        _, tid = s.seat(0, "sp1", p, table=NEW_TABLE)
        with pytest.raises(ValueError):
            s.seat(0, "sp2", p, table=tid)

    def test_forced_missing_table_raises(self):
        s = CrfState(1)
        with pytest.raises(KeyError):
            s.seat(0, "sp1", make_params(1), table=99)


class TestArrangementProbability:
    def test_empty_state_log_peppf_zero(self):
        assert log_peppf(CrfState(2), make_params(2)) == 0.0

    @pytest.mark.parametrize(
        "seq",
        [
            [(0, "a"), (0, "a")],
            [(0, "a"), (0, "b"), (0, "a")],
            [(0, "a"), (1, "a"), (0, "b")],
            [(0, "a"), (1, "a"), (1, "a")],
        ],
    )
    def test_path_product_equals_arrangement_probability(self, seq):
        # along every table-assignment path, the product of seating weights
        # must equal the probability of the final arrangement
        n_arms = max(a for a, _ in seq) + 1
        p = make_params(n_arms, sigma=0.4, theta=1.5, arm_sigma=0.55, arm_theta=0.7)
        for acc, leaf in _paths(CrfState(n_arms), seq, p):
            assert acc == pytest.approx(math.exp(log_peppf(leaf, p)), rel=1e-12)

    def test_sampled_path_product_is_unbiased_for_sequence_probability(self):
        # seat_batch reports the log predictive of the label sequence along a
        # sampled path; its exponential averages to the exact marginal
        seq = [(0, "a"), (0, "a"), (1, "a"), (0, "b")]
        n_arms = 2
        p = make_params(n_arms, sigma=0.45, theta=0.9, arm_sigma=0.35, arm_theta=1.8)
        exact = sum(acc for acc, _ in _paths(CrfState(n_arms), seq, p))
        rng = np.random.default_rng(11)
        batches = [LabeledBatch(arm, (lab,)) for arm, lab in seq]
        draws = []
        for _ in range(20_000):
            _, lp = state_from_batches(n_arms, batches, p, rng)
            draws.append(math.exp(lp))
        draws = np.array(draws)
        se = draws.std(ddof=1) / math.sqrt(len(draws))
        assert abs(draws.mean() - exact) < 4 * se

    @pytest.mark.parametrize("n_per_arm", [(1, 1), (2, 1), (2, 2)])
    def test_arrangement_law_normalizes(self, n_per_arm):
        # total mass over (tables per arm) x (dish grouping of tables) is 1
        p = make_params(len(n_per_arm), sigma=0.6, theta=0.4, arm_sigma=0.25, arm_theta=2.5)
        total = 0.0
        arm_parts = [list(set_partitions(range(n))) for n in n_per_arm]
        for combo in product(*arm_parts):
            tables = []
            arm_lp = 0.0
            for j, part in enumerate(combo):
                arm_lp += eppf_log([len(b) for b in part], p.arms[j])
                tables.extend((j, len(b)) for b in part)
            for dish_part in set_partitions(range(len(tables))):
                lp = arm_lp + eppf_log([len(g) for g in dish_part], p.root)
                total += math.exp(lp)
        assert total == pytest.approx(1.0, abs=1e-11)

    def test_log_peppf_matches_direct_factor_sum(self):
        rng = np.random.default_rng(5)
        p = make_params(3, sigma=0.5, theta=2.0, arm_sigma=0.4, arm_theta=0.9)
        s = CrfState(3)
        labels = ["a", "b", "c", "d"]
        for _ in range(40):
            s.seat(int(rng.integers(3)), labels[rng.integers(len(labels))], p, rng=rng)
        direct = eppf_log(s.dish_table_counts(), p.root) + sum(
            eppf_log(s.arm_table_occupancies(j), p.arms[j]) for j in range(3)
        )
        assert log_peppf(s, p) == pytest.approx(direct, rel=1e-14)
        assert log_peppf_root(s, p.root) + sum(
            log_peppf_arm(s, j, p.arms[j]) for j in range(3)
        ) == pytest.approx(direct, rel=1e-14)


class TestInverses:
    def test_seat_then_remove_restores_canonical(self):
        rng = np.random.default_rng(9)
        p = make_params(2)
        s = CrfState(2)
        for arm, lab in [(0, "a"), (0, "b"), (1, "a")]:
            s.seat(arm, lab, p, rng=rng)
        before = s.to_json()
        _, tid = s.seat(0, "a", p, rng=rng)
        s.remove(0, tid)
        assert s.to_json() == before
        s.validate()

    def test_rollback_restores_after_batch(self):
        rng = np.random.default_rng(13)
        p = make_params(3, sigma=0.35, theta=1.1, arm_sigma=0.5, arm_theta=0.6)
        s = CrfState(3)
        s.seat_batch(LabeledBatch(0, ("a", "b", "a")), p, rng)
        s.seat_batch(LabeledBatch(2, ("c", "a")), p, rng)
        before = s.to_json()
        _, journal = s.seat_batch(
            [LabeledBatch(1, ("a", "d", "d")), LabeledBatch(0, ("e",))], p, rng
        )
        assert s.to_json() != before
        s.rollback(journal)
        assert s.to_json() == before
        s.validate()

    def test_remove_from_missing_table(self):
        s = CrfState(1)
        with pytest.raises(KeyError):
            s.remove(0, 0)

    def test_remove_last_customer_deregisters_dish(self):
        s = CrfState(1)
        p = make_params(1)
        _, tid = s.seat(0, "only", p, table=NEW_TABLE)
        s.remove(0, tid)
        assert s.n_dishes == 0
        assert not s.has_label("only")
        s.validate()

    @given(st.lists(st.tuples(st.integers(0, 1), st.sampled_from("abc")), min_size=1, max_size=25), st.integers(0, 2**31 - 1))
    @settings(max_examples=80, deadline=None)
    def test_fuzz_counts_stay_consistent(self, ops, seed):
        rng = np.random.default_rng(seed)
        p = make_params(2, sigma=0.5, theta=1.0, arm_sigma=0.45, arm_theta=0.8)
        s = CrfState(2)
        journal = []
        for arm, lab in ops:
            _, tid = s.seat(arm, lab, p, rng=rng)
            journal.append((arm, tid))
            if rng.random() < 0.3 and journal:
                i = int(rng.integers(len(journal)))
                a, t = journal.pop(i)
                s.remove(a, t)
            s.validate()
        assert s.total_customers == len(journal)


class TestCopyAndSerialization:
    def test_copy_is_independent(self):
        rng = np.random.default_rng(2)
        p = make_params(2)
        s = CrfState(2)
        s.seat_batch(LabeledBatch(0, ("a", "b", "a")), p, rng)
        c = s.copy()
        before = s.to_json()
        c.seat(1, "z", p, rng=rng)
        assert s.to_json() == before
        assert c != s
        c.validate()
        s.validate()

    def test_json_round_trip(self):
        rng = np.random.default_rng(21)
        p = make_params(3, sigma=0.3, theta=2.0, arm_sigma=0.6, arm_theta=1.4)
        s = CrfState(3)
        for arm, lab in [(0, "a"), (0, "a"), (1, "b"), (2, "a"), (2, "c"), (1, "b")]:
            s.seat(arm, lab, p, rng=rng)
        t = CrfState.from_json(s.to_json())
        assert t == s
        assert t.to_json() == s.to_json()
        assert log_peppf(t, p) == pytest.approx(log_peppf(s, p), rel=1e-14)
        t.validate()

    def test_equality_ignores_table_ids(self):
        p = make_params(1)
        a = CrfState(1)
        a.seat(0, "x", p, table=NEW_TABLE)
        a.seat(0, "y", p, table=NEW_TABLE)
        b = CrfState(1)
        b.seat(0, "y", p, table=NEW_TABLE)
        b.seat(0, "x", p, table=NEW_TABLE)
        assert a == b

    def test_canonical_sorts_occupancies(self):
        doc = {"arms": 1, "seating": [{"sp": [1, 3, 2]}]}
        s = CrfState.from_json(json.dumps(doc))
        assert s.canonical()["seating"][0]["sp"] == [3, 2, 1]

    def test_from_json_rejects_bad_occupancy(self):
        doc = {"arms": 1, "seating": [{"sp": [0]}]}
        with pytest.raises(ValueError):
            CrfState.from_json(json.dumps(doc))
