"""Warm-start sampler for the seating model.

Before any filtering can happen the initial sample has to be turned into a
particle cloud: latent table memberships plus hyperparameters, drawn from
their joint posterior given the observed labels.  A sweep alternates
per-observation table reseating (labels are observed, so the dish of every
observation is fixed; only which table it sits at is latent) with
random-walk Metropolis moves on the transformed hyperparameters.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit

from .crf import (
    CrfState,
    HpyParams,
    LabeledBatch,
    log_peppf_arm,
    log_peppf_root,
)
from .pyp import PyParams
from .smc import _LOG_CLIP, _LOGIT_CLIP, Particle, ParticleSet, from_unconstrained

__all__ = [
    "PriorSpec",
    "GibbsConfig",
    "gibbs_run",
    "log_target_unconstrained",
]


@dataclass(frozen=True)
class PriorSpec:
    """Independent priors: Uniform(0,1) on every discount, Gamma(1,1) on
    every strength.  Densities are expressed on the sampler's working
    coordinates (logit / log), Jacobians included."""

    def coord_log_density(self, x: float, which: int) -> float:
        """Log prior density of one coordinate; which: 0 discount, 1 strength."""
        if which == 0:
            # logit of a uniform variate is standard logistic
            return -np.logaddexp(0.0, -x) - np.logaddexp(0.0, x)
        # log of a unit-rate gamma(1) variate: density exp(y - e^y)
        return x - math.exp(min(x, 705.0))

    def log_density_unconstrained(self, z: np.ndarray) -> float:
        return math.fsum(
            self.coord_log_density(float(z[c]), c % 2) for c in range(z.shape[0])
        )

    def sample_unconstrained(self, n_arms: int, rng: np.random.Generator) -> np.ndarray:
        z = np.empty(2 + 2 * n_arms)
        for c in range(z.shape[0]):
            if c % 2 == 0:
                u = float(np.clip(rng.uniform(), 1e-12, 1.0 - 1e-12))
                z[c] = math.log(u) - math.log1p(-u)
            else:
                z[c] = math.log(max(rng.exponential(), 1e-12))
        return z


@dataclass(frozen=True)
class GibbsConfig:
    n_sweeps: int = 2000
    burn_in: int = 1000
    n_particles: int = 100
    mh_step: float = 0.25
    mh_step_sizes: tuple[float, ...] | None = None
    seed: int | None = None
    trace_path: str | None = None

    def __post_init__(self):
        if self.burn_in < 0 or self.n_sweeps <= self.burn_in:
            raise ValueError("need n_sweeps > burn_in >= 0")
        if self.n_particles < 2:
            raise ValueError("need at least 2 particles")
        if self.n_sweeps - self.burn_in < self.n_particles:
            raise ValueError("post-burn-in sweeps cannot cover n_particles states")
        if self.mh_step <= 0.0:
            raise ValueError("mh_step must be positive")
        if self.mh_step_sizes is not None and any(
            s <= 0.0 for s in self.mh_step_sizes
        ):
            raise ValueError("step sizes must be positive")

    def steps_for(self, n_arms: int) -> np.ndarray:
        d = 2 + 2 * n_arms
        if self.mh_step_sizes is None:
            return np.full(d, self.mh_step)
        if len(self.mh_step_sizes) != d:
            raise ValueError(
                f"expected {d} step sizes for {n_arms} arms, got {len(self.mh_step_sizes)}"
            )
        return np.asarray(self.mh_step_sizes, dtype=float)


def log_target_unconstrained(
    state: CrfState, z: np.ndarray, priors: PriorSpec
) -> float:
    """Joint log posterior density (up to a constant) on working coordinates."""
    params = from_unconstrained(z, state.n_arms)
    lp = log_peppf_root(state, params.root)
    for j in range(state.n_arms):
        lp += log_peppf_arm(state, j, params.arms[j])
    return lp + priors.log_density_unconstrained(z)


def _block_params(z: np.ndarray, block: int) -> PyParams:
    s = float(expit(np.clip(z[2 * block], -_LOGIT_CLIP, _LOGIT_CLIP)))
    t = float(np.exp(np.clip(z[2 * block + 1], -_LOG_CLIP, _LOG_CLIP)))
    return PyParams(s, t)


def _block_lp(state: CrfState, block: int, py: PyParams) -> float:
    if block == 0:
        return log_peppf_root(state, py)
    return log_peppf_arm(state, block - 1, py)


def _reseat_pass(
    state: CrfState,
    obs: Sequence[tuple[int, str]],
    assignments: list[int],
    params: HpyParams,
    rng: np.random.Generator,
) -> None:
    """One sweep of single-observation table reassignment."""
    for i, (arm, label) in enumerate(obs):
        state.remove(arm, assignments[i])
        _, tid = state.seat(arm, label, params, rng=rng)
        assignments[i] = tid


def _mh_pass(
    state: CrfState,
    z: np.ndarray,
    blocks_lp: list[float],
    steps: np.ndarray,
    priors: PriorSpec,
    rng: np.random.Generator,
) -> None:
    """One sweep of per-coordinate random-walk moves; updates z and the
    cached per-block arrangement likelihoods in place."""
    for c in range(z.shape[0]):
        block, which = divmod(c, 2)
        prop = float(z[c] + steps[c] * rng.normal())
        z_new = z.copy()
        z_new[c] = prop
        py = _block_params(z_new, block)
        new_lp = _block_lp(state, block, py)
        delta = (
            new_lp
            - blocks_lp[block]
            + priors.coord_log_density(prop, which)
            - priors.coord_log_density(float(z[c]), which)
        )
        if delta >= 0.0 or math.log(rng.random()) < delta:
            z[c] = prop
            blocks_lp[block] = new_lp


def gibbs_run(
    data: Sequence[LabeledBatch],
    priors: PriorSpec | None = None,
    cfg: GibbsConfig | None = None,
    rng: np.random.Generator | None = None,
) -> ParticleSet:
    """Draw the time-0 particle cloud from the initial sample.

    Returns the last ``n_particles`` post-burn-in sweep states (evenly
    thinned), each carrying its own seating state copy, with equal weights.
    """
    priors = priors or PriorSpec()
    cfg = cfg or GibbsConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)

    obs = [(b.arm, label) for b in data for label in b.labels]
    if not obs:
        raise ValueError("initial sample is empty")
    n_arms = max(arm for arm, _ in obs) + 1
    seen = {arm for arm, _ in obs}
    for j in range(n_arms):
        if j not in seen:
            raise ValueError(f"arm {j} has no observations")

    steps = cfg.steps_for(n_arms)
    z = priors.sample_unconstrained(n_arms, rng)
    params = from_unconstrained(z, n_arms)

    state = CrfState(n_arms)
    assignments: list[int] = []
    for arm, label in obs:
        _, tid = state.seat(arm, label, params, rng=rng)
        assignments.append(tid)

    n_post = cfg.n_sweeps - cfg.burn_in
    harvest_at = {
        cfg.burn_in + (i * n_post) // cfg.n_particles: i
        for i in range(cfg.n_particles)
    }
    particles: list[Particle] = [None] * cfg.n_particles

    trace = None
    writer = None
    if cfg.trace_path is not None:
        trace = open(cfg.trace_path, "w", newline="")
        cols = ["sweep", "sigma", "theta"]
        for j in range(n_arms):
            cols += [f"sigma_{j + 1}", f"theta_{j + 1}"]
        cols.append("log_arrangement")
        writer = csv.writer(trace)
        writer.writerow(cols)

    try:
        for sweep in range(cfg.n_sweeps):
            _reseat_pass(state, obs, assignments, params, rng)
            blocks_lp = [log_peppf_root(state, params.root)] + [
                log_peppf_arm(state, j, params.arms[j]) for j in range(n_arms)
            ]
            _mh_pass(state, z, blocks_lp, steps, priors, rng)
            params = from_unconstrained(z, n_arms)
            if writer is not None:
                row = [sweep, params.root.sigma, params.root.theta]
                for a in params.arms:
                    row += [a.sigma, a.theta]
                row.append(math.fsum(blocks_lp))
                writer.writerow(row)
            slot = harvest_at.get(sweep)
            if slot is not None:
                particles[slot] = Particle(
                    eta=params,
                    state=state.copy(),
                    weight=1.0 / cfg.n_particles,
                    z=z.copy(),
                )
    finally:
        if trace is not None:
            trace.close()

    return ParticleSet(particles)
