"""Strategy races: reproducible discovery-curve experiments with CSV output.

Every replicate draws one shared initial sample, then runs each strategy on
its own deterministic random stream, so curves are comparable within a
replicate and byte-identical across runs with the same master seed.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .crf import LabeledBatch
from .gibbs import GibbsConfig, PriorSpec, gibbs_run
from .populations import PopulationSpec, population_from_config, zipf_population
from .smc import filter_update
from .strategies import (
    GT_FLOOR,
    FreqOfFreq,
    gt_estimate,
    gtts_select,
    hpyts_allocate_delayed,
    hpyts_select,
    largest_remainder,
    oracle_select,
    uniform_select,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "Trace",
    "TraceRow",
    "run_experiment",
    "preset_config",
    "PRESETS",
    "STRATEGIES",
]

STRATEGIES = ("hpyts", "gtts", "uniform", "oracle")
MODES = ("incidence", "delayed")

TRACE_HEADER = ["strategy", "replicate", "step", "arm", "new", "cumulative"]
SUMMARY_HEADER = ["strategy", "step", "mean", "sd"]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    arms: tuple[PopulationSpec, ...]
    strategies: tuple[str, ...]
    n_init: int
    m_per_step: int
    t_steps: int
    r_replicates: int
    mode: str = "incidence"
    n_particles: int = 100
    seed: int = 0
    gibbs: GibbsConfig | None = None

    def __post_init__(self):
        if not self.arms:
            raise ConfigError("arms: need at least one population")
        if not self.strategies:
            raise ConfigError("strategies: need at least one")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ConfigError(f"strategies: unknown strategy {s!r}")
        if len(set(self.strategies)) != len(self.strategies):
            raise ConfigError("strategies: duplicates")
        if self.mode not in MODES:
            raise ConfigError(f"mode: must be one of {MODES}")
        if self.n_init < 1:
            raise ConfigError("n_init: must be >= 1")
        if self.m_per_step < 1:
            raise ConfigError("m_per_step: must be >= 1")
        if self.t_steps < 0:
            raise ConfigError("t_steps: must be >= 0")
        if self.r_replicates < 1:
            raise ConfigError("r_replicates: must be >= 1")
        if self.n_particles < 2:
            raise ConfigError("n_particles: must be >= 2")

    def to_json_dict(self) -> dict:
        d = {
            "arms": [a.to_config() for a in self.arms],
            "strategies": list(self.strategies),
            "n_init": self.n_init,
            "m_per_step": self.m_per_step,
            "t_steps": self.t_steps,
            "r_replicates": self.r_replicates,
            "mode": self.mode,
            "n_particles": self.n_particles,
            "seed": self.seed,
        }
        if self.gibbs is not None:
            d["gibbs"] = {
                "n_sweeps": self.gibbs.n_sweeps,
                "burn_in": self.gibbs.burn_in,
                "mh_step": self.gibbs.mh_step,
            }
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            arms = tuple(population_from_config(a) for a in d["arms"])
            gibbs = None
            if "gibbs" in d:
                g = d["gibbs"]
                gibbs = GibbsConfig(
                    n_sweeps=int(g.get("n_sweeps", 2000)),
                    burn_in=int(g.get("burn_in", 1000)),
                    mh_step=float(g.get("mh_step", 0.25)),
                    n_particles=2,  # placeholder; the runner overrides this
                )
            return cls(
                arms=arms,
                strategies=tuple(d["strategies"]),
                n_init=int(d["n_init"]),
                m_per_step=int(d["m_per_step"]),
                t_steps=int(d["t_steps"]),
                r_replicates=int(d["r_replicates"]),
                mode=d.get("mode", "incidence"),
                n_particles=int(d.get("n_particles", 100)),
                seed=int(d.get("seed", 0)),
                gibbs=gibbs,
            )
        except KeyError as e:
            raise ConfigError(f"missing config field {e.args[0]!r}") from None
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e)) from None


@dataclass(frozen=True)
class TraceRow:
    strategy: str
    replicate: int
    step: int
    arm: str  # "3", "0:12|2:8", or "" for the initialization row
    labels: tuple[str, ...]
    new: int
    cumulative: int


@dataclass
class Trace:
    rows: list[TraceRow]
    strategies: tuple[str, ...]
    t_steps: int

    def summary(self) -> list[tuple[str, int, float, float]]:
        """Per-strategy per-step mean and sample sd of cumulative distinct."""
        acc: dict[tuple[str, int], list[int]] = {}
        for row in self.rows:
            acc.setdefault((row.strategy, row.step), []).append(row.cumulative)
        out = []
        for name in self.strategies:
            for step in range(self.t_steps + 1):
                vals = np.asarray(acc[(name, step)], dtype=float)
                sd = float(vals.std(ddof=1)) if vals.shape[0] > 1 else 0.0
                out.append((name, step, float(vals.mean()), sd))
        return out

    def final_cumulative(self, strategy: str) -> np.ndarray:
        """Final-step cumulative count per replicate, in replicate order."""
        picked = [
            (row.replicate, row.cumulative)
            for row in self.rows
            if row.strategy == strategy and row.step == self.t_steps
        ]
        return np.asarray([c for _, c in sorted(picked)], dtype=float)

    def write_csv(self, out_dir: str) -> tuple[str, str]:
        os.makedirs(out_dir, exist_ok=True)
        trace_path = os.path.join(out_dir, "trace.csv")
        summary_path = os.path.join(out_dir, "summary.csv")
        with open(trace_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_HEADER)
            for r in self.rows:
                w.writerow([r.strategy, r.replicate, r.step, r.arm, r.new, r.cumulative])
        with open(summary_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SUMMARY_HEADER)
            for name, step, mean, sd in self.summary():
                w.writerow([name, step, repr(mean), repr(sd)])
        return trace_path, summary_path


def _draw_batches(
    arms: Sequence[PopulationSpec],
    counts: Sequence[int],
    rng: np.random.Generator,
) -> list[LabeledBatch]:
    return [
        LabeledBatch(j, arms[j].sample(c, rng))
        for j, c in enumerate(counts)
        if c > 0
    ]


def _alloc_string(counts: Sequence[int]) -> str:
    return "|".join(f"{j}:{c}" for j, c in enumerate(counts) if c > 0)


def _run_strategy(
    name: str,
    cfg: ExperimentConfig,
    replicate: int,
    init_labels: list[list[str]],
    seed: np.random.SeedSequence,
) -> list[TraceRow]:
    rng = np.random.default_rng(seed)
    arms = cfg.arms
    n_arms = len(arms)
    seen: set[str] = set()
    for labels in init_labels:
        seen.update(labels)
    rows = [TraceRow(name, replicate, 0, "", (), len(seen), len(seen))]

    ps = None
    counters: list[dict[str, int]] | None = None
    dists = None
    if name == "hpyts":
        gibbs_cfg = replace(
            cfg.gibbs or GibbsConfig(),
            n_particles=cfg.n_particles,
            seed=None,
        )
        data = [LabeledBatch(j, init_labels[j]) for j in range(n_arms)]
        ps = gibbs_run(data, PriorSpec(), gibbs_cfg, rng=rng)
    elif name == "gtts":
        counters = []
        for labels in init_labels:
            c: dict[str, int] = {}
            for l in labels:
                c[l] = c.get(l, 0) + 1
            counters.append(c)
    elif name == "oracle":
        dists = [a.as_dict() for a in arms]

    m = cfg.m_per_step
    for step in range(1, cfg.t_steps + 1):
        if name == "hpyts":
            if cfg.mode == "incidence":
                arm, _ = hpyts_select(ps, m, rng)
                counts = [m if j == arm else 0 for j in range(n_arms)]
            else:
                alloc, _ = hpyts_allocate_delayed(ps, m, rng)
                counts = list(alloc.counts)
        elif name == "gtts":
            fs = [FreqOfFreq.from_counts(c) for c in counters]
            if cfg.mode == "incidence":
                arm = gtts_select(fs, m, rng)
                counts = [m if j == arm else 0 for j in range(n_arms)]
            else:
                weights = [max(gt_estimate(f, m), GT_FLOOR) for f in fs]
                counts = list(largest_remainder(weights, m, rng))
        elif name == "oracle":
            masses = [
                sum(p for l, p in dist.items() if l not in seen) for dist in dists
            ]
            if cfg.mode == "incidence":
                arm = oracle_select(dists, seen, rng)
                counts = [m if j == arm else 0 for j in range(n_arms)]
            else:
                counts = list(largest_remainder(masses, m, rng))
        else:  # uniform
            if cfg.mode == "incidence":
                arm = uniform_select(n_arms, rng)
                counts = [m if j == arm else 0 for j in range(n_arms)]
            else:
                counts = list(largest_remainder([1.0] * n_arms, m, rng))

        batches = _draw_batches(arms, counts, rng)
        drawn = tuple(l for b in batches for l in b.labels)
        new = len(set(drawn) - seen)
        seen.update(drawn)
        arm_str = (
            str(int(np.argmax(counts))) if cfg.mode == "incidence" else _alloc_string(counts)
        )
        rows.append(
            TraceRow(name, replicate, step, arm_str, drawn, new, rows[-1].cumulative + new)
        )

        if name == "hpyts":
            ps = filter_update(ps, batches if len(batches) > 1 else batches[0], rng)
        elif name == "gtts":
            for b in batches:
                c = counters[b.arm]
                for l in b.labels:
                    c[l] = c.get(l, 0) + 1
    return rows


def _run_replicate(
    cfg: ExperimentConfig, replicate: int, rep_seed: np.random.SeedSequence
) -> list[TraceRow]:
    children = rep_seed.spawn(1 + len(cfg.strategies))
    init_rng = np.random.default_rng(children[0])
    init_labels = [a.sample(cfg.n_init, init_rng) for a in cfg.arms]
    rows: list[TraceRow] = []
    for k, name in enumerate(cfg.strategies):
        rows.extend(_run_strategy(name, cfg, replicate, init_labels, children[1 + k]))
    return rows


def run_experiment(
    cfg: ExperimentConfig, out_dir: str | None = None, threads: int = 1
) -> Trace:
    """Race the configured strategies; optionally write trace/summary CSVs.

    Replicates are independent (each owns a spawned seed), so the row order
    and contents do not depend on the worker count.
    """
    master = np.random.SeedSequence(cfg.seed)
    rep_seeds = master.spawn(cfg.r_replicates)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            all_rows = list(
                ex.map(
                    lambda args: _run_replicate(cfg, *args),
                    list(enumerate(rep_seeds)),
                )
            )
    else:
        all_rows = [_run_replicate(cfg, r, s) for r, s in enumerate(rep_seeds)]
    rows = [row for rep_rows in all_rows for row in rep_rows]
    trace = Trace(rows, cfg.strategies, cfg.t_steps)
    if out_dir is not None:
        trace.write_csv(out_dir)
    return trace


def _desk_zipf() -> ExperimentConfig:
    arms = tuple(
        zipf_population(2000, 1.3 if j < 2 else 2.0, prefix=f"a{j}-", name=f"arm{j}")
        for j in range(10)
    )
    return ExperimentConfig(
        arms=arms,
        strategies=("hpyts", "gtts", "uniform", "oracle"),
        n_init=20,
        m_per_step=50,
        t_steps=100,
        r_replicates=20,
        mode="incidence",
        n_particles=100,
        seed=20,
        gibbs=GibbsConfig(n_sweeps=400, burn_in=200, n_particles=100),
    )


def _atlas_scale(t_steps: int) -> ExperimentConfig:
    arms = tuple(
        zipf_population(200, 1.3 if j < 4 else 2.0, prefix=f"a{j}-", name=f"arm{j}")
        for j in range(100)
    )
    return ExperimentConfig(
        arms=arms,
        strategies=("hpyts", "gtts", "uniform", "oracle"),
        n_init=20,
        m_per_step=50,
        t_steps=t_steps,
        r_replicates=10,
        mode="incidence",
        n_particles=100,
        seed=100,
        gibbs=GibbsConfig(n_sweeps=400, burn_in=200, n_particles=100),
    )


def _replay_demo() -> ExperimentConfig:
    # four stages with deliberately unequal diversity: the first holds 60%
    # of all species
    sizes = {"embryo": 180, "fetal": 40, "newborn": 40, "adult": 40}
    arms = []
    start = 0
    for name, size in sizes.items():
        labels = tuple(f"sp{start + i}" for i in range(size))
        probs = tuple(1.0 / size for _ in range(size))
        arms.append(PopulationSpec(labels, probs, kind="categorical", name=name))
        start += size
    return ExperimentConfig(
        arms=tuple(arms),
        strategies=("hpyts", "uniform"),
        n_init=50,
        m_per_step=25,
        t_steps=20,
        r_replicates=50,
        mode="incidence",
        n_particles=100,
        seed=52,
        gibbs=GibbsConfig(n_sweeps=400, burn_in=200, n_particles=100),
    )


PRESETS = {
    "desk-zipf": _desk_zipf,
    "atlas-100": lambda: _atlas_scale(100),
    "atlas-100-long": lambda: _atlas_scale(500),
    "replay-demo": _replay_demo,
}


def preset_config(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
