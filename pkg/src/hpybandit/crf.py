"""Franchise-style seating state for the hierarchical Pitman-Yor model.

Each arm runs its own restaurant: observations are customers, tables are
latent clusters, and every table serves one dish (a species label).  Dishes
are shared across arms through a single top-level process, which is what
lets one arm's diversity inform beliefs about another's.

The state tracks the full table layout plus the aggregate counts the
predictive rule needs: per-table occupancies, tables per arm, tables per
dish, customers per arm.  Seating and removal are exact inverses, so a
sequence of seats can be rolled back without copying the whole state.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .pyp import PyParams, eppf_log

NEW_TABLE = -1


@dataclass(frozen=True)
class HpyParams:
    """Hyperparameters of the hierarchy: one pair for the shared top level
    (``root``) and one pair per arm."""

    root: PyParams
    arms: tuple[PyParams, ...]

    def __post_init__(self):
        if len(self.arms) < 1:
            raise ValueError("at least one arm is required")

    @property
    def n_arms(self) -> int:
        return len(self.arms)


@dataclass(frozen=True)
class LabeledBatch:
    """A batch of species labels observed from one arm, in draw order."""

    arm: int
    labels: tuple[str, ...]

    def __post_init__(self):
        if self.arm < 0:
            raise ValueError(f"arm index must be >= 0, got {self.arm}")
        if len(self.labels) == 0:
            raise ValueError("a batch must contain at least one label")


class CrfState:
    """Mutable seating state; all aggregate counts derive from the tables.

    Internally dishes are integer ids registered per label; table ids are
    per-arm integers that are never reused.  Neither kind of id carries
    meaning: the canonical form (and equality) depend only on which labels
    are served and the multiset of table occupancies per (arm, label).
    """

    __slots__ = (
        "n_arms",
        "_label_dish",
        "_dish_label",
        "_dish_tables",
        "_arm_dish_tids",
        "_arm_table_dish",
        "_arm_table_count",
        "_arm_tables",
        "_arm_customers",
        "_next_tid",
        "_next_dish",
        "_total_tables",
    )

    def __init__(self, n_arms: int):
        if n_arms < 1:
            raise ValueError(f"n_arms must be >= 1, got {n_arms}")
        self.n_arms = n_arms
        self._label_dish: dict[str, int] = {}
        self._dish_label: dict[int, str] = {}
        self._dish_tables: dict[int, int] = {}  # dish -> tables serving it, all arms
        self._arm_dish_tids: list[dict[int, tuple[int, ...]]] = [dict() for _ in range(n_arms)]
        self._arm_table_dish: list[dict[int, int]] = [dict() for _ in range(n_arms)]
        self._arm_table_count: list[dict[int, int]] = [dict() for _ in range(n_arms)]
        self._arm_tables = [0] * n_arms
        self._arm_customers = [0] * n_arms
        self._next_tid = [0] * n_arms
        self._next_dish = 0
        self._total_tables = 0

    # ------------------------------------------------------------------
    # aggregate views

    @property
    def n_dishes(self) -> int:
        return len(self._dish_label)

    @property
    def total_tables(self) -> int:
        return self._total_tables

    @property
    def total_customers(self) -> int:
        return sum(self._arm_customers)

    def arm_tables(self, arm: int) -> int:
        return self._arm_tables[arm]

    def arm_customers(self, arm: int) -> int:
        return self._arm_customers[arm]

    def dish_labels(self) -> list[str]:
        return sorted(self._label_dish)

    def has_label(self, label: str) -> bool:
        return label in self._label_dish

    def tables_serving(self, arm: int, label: str) -> int:
        dish = self._label_dish.get(label)
        if dish is None:
            return 0
        return len(self._arm_dish_tids[arm].get(dish, ()))

    def customers_eating(self, arm: int, label: str) -> int:
        dish = self._label_dish.get(label)
        if dish is None:
            return 0
        counts = self._arm_table_count[arm]
        return sum(counts[t] for t in self._arm_dish_tids[arm].get(dish, ()))

    def dish_table_counts(self) -> list[int]:
        """Tables per dish across all arms (the top-level occupancies)."""
        return list(self._dish_tables.values())

    def arm_table_occupancies(self, arm: int) -> list[int]:
        return list(self._arm_table_count[arm].values())

    # ------------------------------------------------------------------
    # seating

    def seat_choices(
        self, arm: int, label: str, params: HpyParams
    ) -> tuple[list[int], list[float]]:
        """Unnormalized weights for every way to seat one ``label`` customer.

        Returns (choices, weights): each choice is an existing table id or
        NEW_TABLE (always last).  The weight total is the predictive
        probability of observing ``label`` next in ``arm``.
        """
        if not 0 <= arm < self.n_arms:
            raise ValueError(f"arm {arm} out of range for {self.n_arms} arms")
        ap = params.arms[arm]
        rp = params.root
        denom = ap.theta + self._arm_customers[arm]
        open_w = (ap.theta + ap.sigma * self._arm_tables[arm]) / denom
        top_denom = rp.theta + self._total_tables
        dish = self._label_dish.get(label)
        if dish is None:
            # a label never seen anywhere: only a brand-new table can serve it
            if self._total_tables == 0:
                return [NEW_TABLE], [open_w]  # open_w == 1 on an empty arm
            top = (rp.theta + rp.sigma * len(self._dish_label)) / top_denom
            return [NEW_TABLE], [open_w * top]
        top = (self._dish_tables[dish] - rp.sigma) / top_denom
        choices: list[int] = []
        weights: list[float] = []
        counts = self._arm_table_count[arm]
        for t in self._arm_dish_tids[arm].get(dish, ()):
            choices.append(t)
            weights.append((counts[t] - ap.sigma) / denom)
        choices.append(NEW_TABLE)
        weights.append(open_w * top)
        return choices, weights

    def seat(
        self,
        arm: int,
        label: str,
        params: HpyParams,
        rng: np.random.Generator | None = None,
        u: float | None = None,
        table: int | None = None,
    ) -> tuple[float, int]:
        """Seat one observation; returns (log predictive prob of label, table id).

        The table is sampled proportionally to the seating weights unless
        ``table`` forces a specific choice (NEW_TABLE for a fresh table).
        ``u`` supplies the uniform variate for the sampled path, otherwise
        one is drawn from ``rng``.
        """
        choices, weights = self.seat_choices(arm, label, params)
        total = math.fsum(weights)
        if table is None:
            if u is None:
                u = rng.random()
            r = u * total
            acc = 0.0
            table = choices[-1]
            for t, w in zip(choices, weights):
                acc += w
                if r < acc:
                    table = t
                    break
        tid = self._commit_seat(arm, label, table)
        return math.log(total), tid

    def _commit_seat(self, arm: int, label: str, table: int) -> int:
        if table != NEW_TABLE:
            counts = self._arm_table_count[arm]
            if table not in counts:
                raise KeyError(f"table {table} does not exist in arm {arm}")
            if self._dish_label[self._arm_table_dish[arm][table]] != label:
                raise ValueError(f"table {table} does not serve {label!r}")
            counts[table] += 1
            self._arm_customers[arm] += 1
            return table
        dish = self._label_dish.get(label)
        if dish is None:
            dish = self._next_dish
            self._next_dish += 1
            self._label_dish[label] = dish
            self._dish_label[dish] = label
            self._dish_tables[dish] = 0
        tid = self._next_tid[arm]
        self._next_tid[arm] += 1
        self._arm_table_dish[arm][tid] = dish
        self._arm_table_count[arm][tid] = 1
        self._arm_dish_tids[arm][dish] = self._arm_dish_tids[arm].get(dish, ()) + (tid,)
        self._arm_tables[arm] += 1
        self._total_tables += 1
        self._dish_tables[dish] += 1
        self._arm_customers[arm] += 1
        return tid

    def remove(self, arm: int, table: int) -> int:
        """Remove one customer from ``table`` in ``arm``; inverse of seat.

        Empty tables vanish; a dish with no tables left anywhere is
        deregistered.  Returns the dish id the customer was eating.
        """
        counts = self._arm_table_count[arm]
        c = counts.get(table)
        if c is None:
            raise KeyError(f"table {table} does not exist in arm {arm}")
        dish = self._arm_table_dish[arm][table]
        self._arm_customers[arm] -= 1
        if c > 1:
            counts[table] = c - 1
            return dish
        del counts[table]
        del self._arm_table_dish[arm][table]
        tids = self._arm_dish_tids[arm][dish]
        if len(tids) == 1:
            del self._arm_dish_tids[arm][dish]
        else:
            i = len(tids) - 1 if tids[-1] == table else tids.index(table)
            self._arm_dish_tids[arm][dish] = tids[:i] + tids[i + 1 :]
        self._arm_tables[arm] -= 1
        self._total_tables -= 1
        m = self._dish_tables[dish] - 1
        if m > 0:
            self._dish_tables[dish] = m
        else:
            del self._dish_tables[dish]
            label = self._dish_label.pop(dish)
            del self._label_dish[label]
        return dish

    def seat_batch(
        self,
        batch: "LabeledBatch | Sequence[LabeledBatch]",
        params: HpyParams,
        rng: np.random.Generator,
    ) -> tuple[float, list[tuple[int, int]]]:
        """Seat a batch (or several) in order; returns (total log predictive
        probability, journal of (arm, table) entries for rollback)."""
        batches = [batch] if isinstance(batch, LabeledBatch) else list(batch)
        journal: list[tuple[int, int]] = []
        total = 0.0
        for b in batches:
            us = rng.random(len(b.labels))
            for label, u in zip(b.labels, us):
                lp, tid = self.seat(b.arm, label, params, u=float(u))
                total += lp
                journal.append((b.arm, tid))
        return total, journal

    def rollback(self, journal: Sequence[tuple[int, int]]) -> None:
        """Undo a journal of seats, restoring the pre-batch state exactly."""
        for arm, tid in reversed(journal):
            self.remove(arm, tid)

    def label_log_predictive(self, arm: int, label: str, params: HpyParams) -> float:
        """Log probability that the next observation in ``arm`` is ``label``."""
        _, weights = self.seat_choices(arm, label, params)
        return math.log(math.fsum(weights))

    # ------------------------------------------------------------------
    # copying, equality, serialization

    def copy(self) -> "CrfState":
        new = CrfState.__new__(CrfState)
        new.n_arms = self.n_arms
        new._label_dish = dict(self._label_dish)
        new._dish_label = dict(self._dish_label)
        new._dish_tables = dict(self._dish_tables)
        new._arm_dish_tids = [dict(d) for d in self._arm_dish_tids]
        new._arm_table_dish = [dict(d) for d in self._arm_table_dish]
        new._arm_table_count = [dict(d) for d in self._arm_table_count]
        new._arm_tables = list(self._arm_tables)
        new._arm_customers = list(self._arm_customers)
        new._next_tid = list(self._next_tid)
        new._next_dish = self._next_dish
        new._total_tables = self._total_tables
        return new

    def canonical(self) -> dict:
        """Id-free description: per arm, label -> sorted table occupancies."""
        seating = []
        for j in range(self.n_arms):
            counts = self._arm_table_count[j]
            per = {}
            for dish, tids in self._arm_dish_tids[j].items():
                occ = sorted((counts[t] for t in tids), reverse=True)
                per[self._dish_label[dish]] = occ
            seating.append({k: per[k] for k in sorted(per)})
        return {"arms": self.n_arms, "seating": seating}

    def __eq__(self, other) -> bool:
        if not isinstance(other, CrfState):
            return NotImplemented
        return self.canonical() == other.canonical()

    def __repr__(self) -> str:
        return (
            f"CrfState(arms={self.n_arms}, customers={self.total_customers}, "
            f"tables={self._total_tables}, dishes={self.n_dishes})"
        )

    def to_json(self) -> str:
        """Faithful dump: preserves ids and every iteration order.

        Restoring this document yields a state whose future seating paths and
        floating-point reductions match the live object exactly, which is what
        event-log replay needs.  Use ``canonical()`` for id-free comparison.
        """
        doc = {
            "arms": self.n_arms,
            "labels": [[lab, dish] for lab, dish in self._label_dish.items()],
            "dish_tables": [[dish, m] for dish, m in self._dish_tables.items()],
            "seating": [
                {
                    "tables": [
                        [tid, self._arm_table_dish[j][tid], c]
                        for tid, c in self._arm_table_count[j].items()
                    ],
                    "dish_tids": [
                        [dish, list(tids)]
                        for dish, tids in self._arm_dish_tids[j].items()
                    ],
                }
                for j in range(self.n_arms)
            ],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "CrfState":
        doc = json.loads(text)
        if "labels" in doc:
            return cls._from_exact_doc(doc)
        return cls._from_canonical_doc(doc)

    @classmethod
    def _from_exact_doc(cls, doc: dict) -> "CrfState":
        state = cls(int(doc["arms"]))
        seating = doc["seating"]
        if len(seating) != state.n_arms:
            raise ValueError("seating list does not match the arm count")
        for lab, dish in doc["labels"]:
            state._label_dish[str(lab)] = int(dish)
            state._dish_label[int(dish)] = str(lab)
        if len(state._label_dish) != len(state._dish_label):
            raise ValueError("label/dish mapping is not a bijection")
        for dish, m in doc["dish_tables"]:
            state._dish_tables[int(dish)] = int(m)
        for j, per in enumerate(seating):
            for tid, dish, occ in per["tables"]:
                tid, dish, occ = int(tid), int(dish), int(occ)
                if occ < 1:
                    raise ValueError("table occupancies must be >= 1")
                if dish not in state._dish_label:
                    raise ValueError(f"table {tid} serves an unregistered dish")
                state._arm_table_dish[j][tid] = dish
                state._arm_table_count[j][tid] = occ
                state._arm_tables[j] += 1
                state._arm_customers[j] += occ
                state._total_tables += 1
            for dish, tids in per["dish_tids"]:
                state._arm_dish_tids[j][int(dish)] = tuple(int(t) for t in tids)
            state._next_tid[j] = max(state._arm_table_count[j], default=-1) + 1
        state._next_dish = max(state._dish_label, default=-1) + 1
        try:
            state.validate()
        except AssertionError:
            raise ValueError("inconsistent seating document") from None
        return state

    @classmethod
    def _from_canonical_doc(cls, doc: dict) -> "CrfState":
        """Accept the id-free ``canonical()`` form (convenient to hand-write)."""
        state = cls(int(doc["arms"]))
        seating = doc["seating"]
        if len(seating) != state.n_arms:
            raise ValueError("seating list does not match the arm count")
        # register dishes in sorted label order so ids are reproducible
        for label in sorted({lab for per in seating for lab in per}):
            dish = state._next_dish
            state._next_dish += 1
            state._label_dish[label] = dish
            state._dish_label[dish] = label
            state._dish_tables[dish] = 0
        for j, per in enumerate(seating):
            for label in sorted(per):
                dish = state._label_dish[label]
                for occ in per[label]:
                    occ = int(occ)
                    if occ < 1:
                        raise ValueError("table occupancies must be >= 1")
                    tid = state._next_tid[j]
                    state._next_tid[j] += 1
                    state._arm_table_dish[j][tid] = dish
                    state._arm_table_count[j][tid] = occ
                    state._arm_dish_tids[j][dish] = state._arm_dish_tids[j].get(dish, ()) + (tid,)
                    state._arm_tables[j] += 1
                    state._total_tables += 1
                    state._dish_tables[dish] += 1
                    state._arm_customers[j] += occ
        return state

    def validate(self) -> None:
        """Recompute every aggregate from the raw table maps and compare."""
        total_tables = 0
        dish_tables: dict[int, int] = {}
        for j in range(self.n_arms):
            counts = self._arm_table_count[j]
            assert self._arm_tables[j] == len(counts)
            assert self._arm_customers[j] == sum(counts.values())
            assert all(c >= 1 for c in counts.values())
            assert set(self._arm_table_dish[j]) == set(counts)
            total_tables += len(counts)
            seen_tids = set()
            for dish, tids in self._arm_dish_tids[j].items():
                assert len(tids) > 0
                for t in tids:
                    assert self._arm_table_dish[j][t] == dish
                    seen_tids.add(t)
                dish_tables[dish] = dish_tables.get(dish, 0) + len(tids)
            assert seen_tids == set(counts)
        assert self._total_tables == total_tables
        assert self._dish_tables == dish_tables
        assert set(self._dish_label) == set(dish_tables)
        assert {self._label_dish[l] for l in self._label_dish} == set(self._dish_label)


def state_from_batches(
    n_arms: int,
    batches: Iterable[LabeledBatch],
    params: HpyParams,
    rng: np.random.Generator,
) -> tuple[CrfState, float]:
    """Build a state by seating batches sequentially; returns (state, log
    predictive probability of the whole label sequence along the sampled
    table path)."""
    state = CrfState(n_arms)
    total = 0.0
    for b in batches:
        lp, _ = state.seat_batch(b, params, rng)
        total += lp
    return state, total


def log_peppf(state: CrfState, params: HpyParams) -> float:
    """Log probability of the full seating arrangement.

    Factorizes as a top-level partition law over tables-per-dish times one
    partition law per arm over its table occupancies, each normalized so
    total mass over arrangements is 1.  The empty state has log
    probability 0.
    """
    return log_peppf_root(state, params.root) + sum(
        log_peppf_arm(state, j, params.arms[j]) for j in range(state.n_arms)
    )


def log_peppf_root(state: CrfState, root: PyParams) -> float:
    """Top-level factor: partition of all tables by the dish they serve."""
    return eppf_log(state.dish_table_counts(), root)


def log_peppf_arm(state: CrfState, arm: int, arm_params: PyParams) -> float:
    """Arm factor: partition of the arm's customers into tables."""
    return eppf_log(state.arm_table_occupancies(arm), arm_params)
