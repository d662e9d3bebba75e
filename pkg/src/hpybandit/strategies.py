"""Arm-selection policies.

Four ways to decide where the next batch of samples goes: Thompson sampling
over the seating posterior (single-arm or split-budget), a smoothed
Good-Toulmin extrapolation raced the same way, a uniform baseline, and a
simulation-only oracle that peeks at the true distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .reward import RewardDraw, thompson_draw

__all__ = [
    "Allocation",
    "FreqOfFreq",
    "argmax_tiebreak",
    "largest_remainder",
    "hpyts_select",
    "hpyts_allocate_delayed",
    "gt_estimate",
    "gtts_select",
    "oracle_select",
    "uniform_select",
    "GT_FLOOR",
]

# floor applied to clamped extrapolation estimates so sampling weights never
# collapse to all-zero
GT_FLOOR = 1e-6


@dataclass(frozen=True)
class Allocation:
    """Per-arm batch sizes for one step; incidence mode names the single arm."""

    counts: tuple[int, ...]
    chosen_arm: int | None = None

    def __post_init__(self):
        if not self.counts or any(c < 0 for c in self.counts):
            raise ValueError("counts must be nonnegative and nonempty")
        if self.chosen_arm is not None:
            if not 0 <= self.chosen_arm < len(self.counts):
                raise ValueError("chosen_arm out of range")
            if self.counts[self.chosen_arm] != self.budget:
                raise ValueError("incidence allocation must give the whole budget to one arm")

    @property
    def budget(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True, eq=False)
class FreqOfFreq:
    """Frequency-of-frequencies table for one arm: phi[i] species seen i times."""

    phi: dict[int, int]

    def __post_init__(self):
        for i, count in self.phi.items():
            if i < 1 or count < 1:
                raise ValueError("frequencies and their counts must be positive")

    @classmethod
    def from_counts(cls, counts: Mapping[str, int]) -> "FreqOfFreq":
        phi: dict[int, int] = {}
        for c in counts.values():
            if c < 0:
                raise ValueError("negative species count")
            if c > 0:
                phi[c] = phi.get(c, 0) + 1
        return cls(phi)

    @property
    def n(self) -> int:
        """Total observations in the arm."""
        return sum(i * c for i, c in self.phi.items())


def argmax_tiebreak(values: Sequence[float], rng: np.random.Generator) -> int:
    """Index of the maximum; exact ties resolved uniformly at random."""
    arr = np.asarray(values, dtype=float)
    ties = np.flatnonzero(arr == arr.max())
    return int(ties[rng.integers(ties.shape[0])])


def largest_remainder(
    weights: Sequence[float], budget: int, rng: np.random.Generator
) -> tuple[int, ...]:
    """Integerize ``budget`` proportionally to ``weights``.

    Floors the exact shares, then hands the leftover units to the largest
    fractional parts, remainder ties broken by coin.  All-zero weights fall
    back to an equal split.
    """
    w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
    if budget < 0:
        raise ValueError("budget must be nonnegative")
    total = w.sum()
    if total <= 0.0:
        w = np.ones_like(w)
        total = w.sum()
    shares = budget * w / total
    base = np.floor(shares).astype(int)
    leftover = budget - int(base.sum())
    if leftover:
        frac = shares - base
        order = sorted(range(w.shape[0]), key=lambda j: (-frac[j], rng.random()))
        for j in order[:leftover]:
            base[j] += 1
    return tuple(int(b) for b in base)


def hpyts_select(
    ps, m_budget: int, rng: np.random.Generator
) -> tuple[int, RewardDraw]:
    """One Thompson round: sample a posterior draw, play the best arm."""
    if m_budget < 1:
        raise ValueError("budget must be at least 1")
    draw = thompson_draw(ps, m_budget, rng)
    return argmax_tiebreak(draw.expected_new, rng), draw


def hpyts_allocate_delayed(
    ps, m_budget: int, rng: np.random.Generator
) -> tuple[Allocation, RewardDraw]:
    """One Thompson round, budget split across arms by expected discoveries."""
    if m_budget < 1:
        raise ValueError("budget must be at least 1")
    draw = thompson_draw(ps, m_budget, rng)
    counts = largest_remainder(draw.expected_new, m_budget, rng)
    return Allocation(counts), draw


def gt_estimate(
    f: FreqOfFreq,
    m_budget: int,
    smoothing: str = "binomial",
    k: int | None = None,
    q: float | None = None,
) -> float:
    """Extrapolated number of new species in ``m_budget`` further draws.

    The alternating series -sum_i (-t)^i P(L >= i) phi_i with t = M/n.  With
    smoothing "none" the tail weights are all 1 (the raw estimator, which
    oscillates badly for t > 1); "binomial" tapers them with a Binomial(k, q)
    tail chosen for the extrapolation range, left unsmoothed for t <= 1.
    The result is clamped to [0, M].
    """
    if smoothing not in ("none", "binomial"):
        raise ValueError(f"unknown smoothing {smoothing!r}")
    if m_budget < 0:
        raise ValueError("budget must be nonnegative")
    if not f.phi or m_budget == 0:
        return 0.0
    n = f.n
    t = m_budget / n
    max_i = max(f.phi)
    smoothed = smoothing == "binomial" and t > 1.0
    if smoothed:
        if k is None:
            k = max(1, math.ceil(0.5 * math.log2(n * t * t / (t - 1.0))))
        if q is None:
            q = 2.0 / (t + 2.0)
        max_i = min(max_i, k)
    terms = []
    for i, count in sorted(f.phi.items()):
        if i > max_i:
            break
        tail = float(stats.binom.sf(i - 1, k, q)) if smoothed else 1.0
        terms.append((-t) ** i * tail * count)
    est = -math.fsum(terms)
    return min(max(est, 0.0), float(m_budget))


def gtts_select(
    fs: Sequence[FreqOfFreq],
    m_budget: int,
    rng: np.random.Generator,
    smoothing: str = "binomial",
) -> int:
    """Sample an arm with probability proportional to its extrapolation estimate."""
    for j, f in enumerate(fs):
        if f.n < 1:
            raise ValueError(f"arm {j} has no observations")
    weights = np.array(
        [max(gt_estimate(f, m_budget, smoothing), GT_FLOOR) for f in fs]
    )
    return int(rng.choice(len(fs), p=weights / weights.sum()))


def oracle_select(
    true_dists: Sequence[Mapping[str, float]],
    seen: set[str],
    rng: np.random.Generator,
) -> int:
    """Play the arm with the most true probability mass on unseen species.

    Simulation-only: requires the ground-truth distributions.  ``seen`` is
    the union of species observed anywhere, matching the global-novelty
    reward the races score.
    """
    masses = [
        math.fsum(p for label, p in dist.items() if label not in seen)
        for dist in true_dists
    ]
    return argmax_tiebreak(masses, rng)


def uniform_select(n_arms: int, rng: np.random.Generator) -> int:
    """Uniform random arm."""
    if n_arms < 1:
        raise ValueError("need at least one arm")
    return int(rng.integers(n_arms))
