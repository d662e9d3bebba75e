"""Single-population Pitman-Yor combinatorics.

Predictive (Chinese restaurant) rule, exchangeable partition probabilities,
generalized factorial coefficients, and the exact law of the number of
distinct values in a sample.  All partition-level quantities are computed in
log space; stick-breaking sampling of the random measure is provided as an
independent simulation cross-check of the combinatorial formulas.
"""
from __future__ import annotations

import math
import threading
from collections import Counter, OrderedDict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln

# A full coefficient table is O(n_max^2) doubles, so ~128 MB at the cap.
GFC_N_CAP = 4000


@dataclass(frozen=True)
class PyParams:
    """Pitman-Yor parameter pair: discount ``sigma`` and strength ``theta``.

    The discount must lie strictly inside (0, 1); the Dirichlet-process
    boundary sigma = 0 is excluded because several downstream formulas divide
    by sigma.  The strength must be positive.
    """

    sigma: float
    theta: float

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise ValueError(f"sigma must lie strictly in (0, 1), got {self.sigma}")
        if not self.theta > 0.0:
            raise ValueError(f"theta must be positive, got {self.theta}")


@dataclass(frozen=True)
class ClusterCounts:
    """Occupancy counts of the blocks of a partition, all at least 1."""

    counts: tuple[int, ...]

    def __post_init__(self):
        for c in self.counts:
            if not isinstance(c, (int, np.integer)) or c < 1:
                raise ValueError(f"cluster counts must be integers >= 1, got {self.counts}")

    @property
    def n(self) -> int:
        return int(sum(self.counts))

    @property
    def k(self) -> int:
        return len(self.counts)

    @classmethod
    def from_labels(cls, labels: Iterable) -> "ClusterCounts":
        return cls(tuple(Counter(labels).values()))


def _as_counts(counts) -> tuple[int, ...]:
    if isinstance(counts, ClusterCounts):
        return counts.counts
    return tuple(int(c) for c in counts)


def crp_predictive(counts, params: PyParams) -> np.ndarray:
    """Predictive distribution of the next draw given cluster occupancies.

    Returns a vector of length K + 1: entry k < K is the probability of
    joining existing cluster k, (n_k - sigma) / (theta + n); the final entry
    is the probability of opening a new cluster, (theta + K sigma) / (theta + n).
    """
    cts = _as_counts(counts)
    n = sum(cts)
    k = len(cts)
    denom = params.theta + n
    out = np.empty(k + 1)
    out[:k] = (np.asarray(cts, dtype=float) - params.sigma) / denom
    out[k] = (params.theta + k * params.sigma) / denom
    return out


def eppf_log(counts, params: PyParams) -> float:
    """Log probability of a partition of n items with the given block sizes.

    Normalized so that summing exp(eppf_log) over all set partitions of
    {1..n} gives exactly 1:

        prod_{i=1}^{K-1} (theta + i sigma) * prod_k (1 - sigma)_{n_k - 1}
        -----------------------------------------------------------------
                              (theta + 1)_{n - 1}

    The empty partition (no blocks) is assigned log probability 0.
    """
    cts = _as_counts(counts)
    if not cts:
        return 0.0
    for c in cts:
        if c < 1:
            raise ValueError(f"block sizes must be >= 1, got {cts}")
    sigma, theta = params.sigma, params.theta
    n = sum(cts)
    k = len(cts)
    num = 0.0
    if k > 1:
        num += float(np.sum(np.log(theta + sigma * np.arange(1, k))))
    arr = np.asarray(cts, dtype=float)
    num += float(np.sum(gammaln(arr - sigma) - gammaln(1.0 - sigma)))
    den = gammaln(theta + n) - gammaln(theta + 1.0)
    return num - float(den)


class GfcTable:
    """Triangular table of log generalized factorial coefficients.

    ``log_values[n, k]`` holds log C(n, k; sigma), built from the recurrence

        C(n, k; sigma) = sigma C(n-1, k-1; sigma) + (n - 1 - k sigma) C(n-1, k; sigma)

    with C(0, 0) = 1 and C(n, k) = 0 outside 1 <= k <= n.  All entries are
    kept in log space; structural zeros are -inf.  The recurrence is stable
    here because both summands are positive for k <= n - 1.
    """

    def __init__(self, sigma: float, n_max: int):
        if not 0.0 < sigma < 1.0:
            raise ValueError(f"sigma must lie strictly in (0, 1), got {sigma}")
        if n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {n_max}")
        if n_max > GFC_N_CAP:
            raise ValueError(
                f"n_max {n_max} exceeds the table cap {GFC_N_CAP}; "
                "a larger table would need more memory than this tool budgets for"
            )
        self.sigma = float(sigma)
        self.n_max = int(n_max)
        lv = np.full((n_max + 1, n_max + 1), -np.inf)
        lv[0, 0] = 0.0
        log_sigma = math.log(sigma)
        for n in range(1, n_max + 1):
            prev = lv[n - 1]
            row = log_sigma + prev[0:n]
            if n >= 2:
                ks = np.arange(1, n)
                row[: n - 1] = np.logaddexp(
                    row[: n - 1], np.log((n - 1) - ks * sigma) + prev[1:n]
                )
            lv[n, 1 : n + 1] = row
        self.log_values = lv

    def log_row(self, n: int) -> np.ndarray:
        """log C(n, k; sigma) for k = 1..n."""
        if not 1 <= n <= self.n_max:
            raise ValueError(f"n must lie in [1, {self.n_max}], got {n}")
        return self.log_values[n, 1 : n + 1]


def gfc_table(sigma: float, n_max: int) -> GfcTable:
    """Build a fresh table of log generalized factorial coefficients."""
    return GfcTable(sigma, n_max)


class _GfcCache:
    """Process-wide LRU cache of coefficient tables keyed by exact sigma bits.

    Tables grow geometrically so repeated requests for slightly larger n do
    not trigger repeated rebuilds.  Guarded by a lock; readers share the
    immutable tables freely once retrieved.
    """

    def __init__(self, max_entries: int = 64):
        self._lock = threading.Lock()
        self._tables: OrderedDict[float, GfcTable] = OrderedDict()
        self._max_entries = max_entries

    def get(self, sigma: float, n_min: int) -> GfcTable:
        sigma = float(sigma)
        with self._lock:
            tab = self._tables.get(sigma)
            if tab is not None and tab.n_max >= n_min:
                self._tables.move_to_end(sigma)
                return tab
            size = 64
            if tab is not None:
                size = tab.n_max
            while size < n_min:
                size *= 2
            size = min(size, GFC_N_CAP)
            if size < n_min:
                raise ValueError(
                    f"requested coefficient table size {n_min} exceeds cap {GFC_N_CAP}"
                )
            tab = GfcTable(sigma, size)
            self._tables[sigma] = tab
            self._tables.move_to_end(sigma)
            while len(self._tables) > self._max_entries:
                self._tables.popitem(last=False)
            return tab


_shared_gfc = _GfcCache()


def shared_gfc(sigma: float, n_min: int) -> GfcTable:
    """Fetch (building if needed) the cached coefficient table for sigma."""
    return _shared_gfc.get(sigma, n_min)


def distinct_count_log_pmf(n: int, params: PyParams, table: GfcTable | None = None) -> np.ndarray:
    """Log pmf of the number of distinct values among n draws.

    Entry k - 1 of the returned length-n vector is

        log P(K_n = k) = sum_{i=1}^{k-1} log(theta + i sigma)
                         + log C(n, k; sigma) - k log sigma
                         - [lgamma(theta + n) - lgamma(theta + 1)]
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if table is None:
        table = shared_gfc(params.sigma, n)
    if table.sigma != params.sigma:
        raise ValueError("coefficient table was built for a different sigma")
    if n > table.n_max:
        raise ValueError(f"n = {n} exceeds the table size {table.n_max}")
    sigma, theta = params.sigma, params.theta
    ks = np.arange(1, n + 1)
    rising = np.concatenate(([0.0], np.cumsum(np.log(theta + sigma * np.arange(1, n)))))
    logden = gammaln(theta + n) - gammaln(theta + 1.0)
    return rising + table.log_row(n) - ks * math.log(sigma) - logden


def distinct_count_pmf(n: int, params: PyParams, table: GfcTable | None = None) -> np.ndarray:
    """Pmf of the number of distinct values among n draws; sums to 1."""
    return np.exp(distinct_count_log_pmf(n, params, table))


def stick_breaking_sample(
    params: PyParams, truncation: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw the first ``truncation`` stick-breaking weights of the random measure.

    Break points are V_k ~ Beta(1 - sigma, theta + k sigma), k = 1, 2, ...;
    weight k is V_k * prod_{i<k} (1 - V_i).  The remaining mass
    1 - sum(weights) belongs to the un-truncated tail.
    """
    if truncation < 1:
        raise ValueError(f"truncation must be >= 1, got {truncation}")
    ks = np.arange(1, truncation + 1)
    v = rng.beta(1.0 - params.sigma, params.theta + params.sigma * ks)
    tail = np.concatenate(([1.0], np.cumprod(1.0 - v)[:-1]))
    return v * tail
