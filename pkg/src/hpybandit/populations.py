"""True populations the simulator samples from.

A population is a fixed categorical distribution over species labels, built
either from a Zipf law (synthetic worlds) or from an empirical table of
labeled observations (replay of a real survey).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "PopulationSpec",
    "zipf_population",
    "load_replay",
    "read_label_counts",
    "population_from_counts",
    "population_from_config",
]


@dataclass(frozen=True)
class PopulationSpec:
    """A known species distribution for one arm."""

    labels: tuple[str, ...]
    probs: tuple[float, ...]
    kind: str = "categorical"
    name: str = ""
    s: float | None = None  # zipf exponent, kept so configs round-trip
    prefix: str | None = None

    def __post_init__(self):
        if len(self.labels) != len(self.probs) or not self.labels:
            raise ValueError("labels and probs must align and be nonempty")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate species labels")
        if any(p < 0.0 for p in self.probs):
            raise ValueError("negative probability")
        if abs(sum(self.probs) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")

    @property
    def n_species(self) -> int:
        return len(self.labels)

    @cached_property
    def _prob_array(self) -> np.ndarray:
        return np.asarray(self.probs)

    def sample(self, m: int, rng: np.random.Generator) -> list[str]:
        """Draw m labels with replacement."""
        if m == 0:
            return []
        idx = rng.choice(self.n_species, size=m, p=self._prob_array)
        return [self.labels[i] for i in idx]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.labels, self.probs))

    def to_config(self) -> dict:
        if self.kind == "zipf":
            return {
                "kind": "zipf",
                "n_species": self.n_species,
                "s": self.s,
                "prefix": self.prefix,
                "name": self.name,
            }
        return {
            "kind": "categorical",
            "name": self.name,
            "labels": list(self.labels),
            "probs": list(self.probs),
        }


def zipf_population(
    n_species: int, s: float, prefix: str = "sp", name: str = ""
) -> PopulationSpec:
    """Power-law population: p(k) proportional to k^-s for k = 1..n_species.

    Normalized in log space so steep exponents cannot underflow the
    normalizer.
    """
    if n_species < 1:
        raise ValueError("need at least one species")
    if s <= 0.0:
        raise ValueError("exponent must be positive")
    ks = np.arange(1, n_species + 1, dtype=float)
    logp = -s * np.log(ks)
    logp -= logsumexp(logp)
    probs = np.exp(logp)
    probs /= probs.sum()  # kill residual rounding so the invariant holds
    labels = tuple(f"{prefix}{k}" for k in range(1, n_species + 1))
    return PopulationSpec(
        labels,
        tuple(float(p) for p in probs),
        kind="zipf",
        name=name,
        s=float(s),
        prefix=prefix,
    )


def read_label_counts(path: str) -> dict[str, dict[str, int]]:
    """Read an ``arm,label[,count]`` table into per-arm label counts.

    The header row names the columns; each data row adds ``count`` (default
    1) observations of ``label`` to ``arm``.  Malformed rows raise with their
    line number.
    """
    counts: dict[str, dict[str, int]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("replay table is empty") from None
        header = [h.strip().lower() for h in header]
        if header[:2] != ["arm", "label"] or len(header) > 3 or (
            len(header) == 3 and header[2] != "count"
        ):
            raise ValueError("line 1: header must be arm,label[,count]")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            arm, label = row[0].strip(), row[1].strip()
            if not arm or not label:
                raise ValueError(f"line {lineno}: empty arm or label")
            n = 1
            if len(header) == 3:
                try:
                    n = int(row[2])
                except ValueError:
                    raise ValueError(f"line {lineno}: count must be an integer") from None
                if n < 1:
                    raise ValueError(f"line {lineno}: count must be positive")
            bucket = counts.setdefault(arm, {})
            bucket[label] = bucket.get(label, 0) + n
    if not counts:
        raise ValueError("replay table has no data rows")
    return counts


def load_replay(path: str) -> dict[str, PopulationSpec]:
    """Per-arm empirical populations from an ``arm,label[,count]`` table."""
    return {
        arm: population_from_counts(bucket, name=arm)
        for arm, bucket in read_label_counts(path).items()
    }


def population_from_counts(counts: Mapping[str, int], name: str = "") -> PopulationSpec:
    """Empirical categorical population from label counts."""
    total = sum(counts.values())
    if total <= 0:
        raise ValueError("counts must be positive")
    labels = tuple(counts)
    probs = tuple(counts[l] / total for l in labels)
    return PopulationSpec(labels, probs, kind="categorical", name=name)


def population_from_config(d: Mapping) -> PopulationSpec:
    """Build a population from its config-file form."""
    kind = d.get("kind")
    name = d.get("name", "")
    if kind == "zipf":
        return zipf_population(
            int(d["n_species"]), float(d["s"]), prefix=d.get("prefix", "sp"), name=name
        )
    if kind == "categorical":
        if "counts" in d:
            return population_from_counts(
                {str(k): int(v) for k, v in d["counts"].items()}, name=name
            )
        labels = tuple(str(l) for l in d["labels"])
        probs = tuple(float(p) for p in d["probs"])
        return PopulationSpec(labels, probs, kind="categorical", name=name)
    raise ValueError(f"unknown population kind {kind!r}")
