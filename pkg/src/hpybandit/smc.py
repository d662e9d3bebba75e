"""Kernel-shrinkage particle filtering for the hierarchical seating model.

After every observed batch the filter updates a cloud of particles, each
carrying hyperparameters (root and per-arm discount/strength) together with
its own seating state.  Proposals are Gaussian in unconstrained coordinates
(logit discounts, log strengths), shrunk toward the weighted mean so the
cloud's first two moments are preserved before the likelihood reweighting.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit, logit, logsumexp

from .crf import CrfState, HpyParams, LabeledBatch
from .pyp import PyParams

__all__ = [
    "Particle",
    "ParticleSet",
    "FilterDiagnostics",
    "batch_loglik",
    "filter_update",
    "kernel_filter_step",
    "effective_sample_size",
    "to_unconstrained",
    "from_unconstrained",
]

# expit(+/-36) is one ulp away from the boundary; exp is clipped well inside
# the finite range
_LOGIT_CLIP = 36.0
_LOG_CLIP = 700.0


def to_unconstrained(params: HpyParams) -> np.ndarray:
    """Map hyperparameters to R^(2+2J): [logit s, log t, logit s_1, log t_1, ...]."""
    z = [logit(params.root.sigma), math.log(params.root.theta)]
    for arm in params.arms:
        z.append(logit(arm.sigma))
        z.append(math.log(arm.theta))
    return np.array(z, dtype=float)


def from_unconstrained(z: np.ndarray, n_arms: int) -> HpyParams:
    """Inverse of :func:`to_unconstrained`; clips so domains stay open."""
    z = np.asarray(z, dtype=float)
    if z.shape != (2 + 2 * n_arms,):
        raise ValueError(f"expected {2 + 2 * n_arms} coordinates, got {z.shape}")
    sig = expit(np.clip(z[0::2], -_LOGIT_CLIP, _LOGIT_CLIP))
    tht = np.exp(np.clip(z[1::2], -_LOG_CLIP, _LOG_CLIP))
    root = PyParams(float(sig[0]), float(tht[0]))
    arms = tuple(PyParams(float(s), float(t)) for s, t in zip(sig[1:], tht[1:]))
    return HpyParams(root, arms)


@dataclass(eq=False)
class Particle:
    """One hypothesis: hyperparameters, a seating state, and a weight."""

    eta: HpyParams
    state: CrfState
    weight: float
    z: np.ndarray = field(default=None)  # unconstrained coords, derived

    def __post_init__(self):
        if not math.isfinite(self.weight) or self.weight < 0.0:
            raise ValueError(f"weight must be finite and nonnegative, got {self.weight}")
        if self.z is None:
            self.z = to_unconstrained(self.eta)


class ParticleSet:
    """Weighted particle cloud with the shrinkage constants h and a.

    a is always recomputed as sqrt(1 - h^2), so a^2 + h^2 = 1 to rounding.
    Weights are normalized to sum to 1 at construction.
    """

    def __init__(self, particles: Sequence[Particle], h: float | None = None):
        particles = list(particles)
        if len(particles) < 2:
            raise ValueError("need at least 2 particles")
        total = math.fsum(p.weight for p in particles)
        if not math.isfinite(total) or total <= 0.0:
            raise ValueError("particle weights must sum to a positive finite value")
        for p in particles:
            p.weight /= total
        if h is None:
            h = 1.0 / len(particles)
        if not 0.0 < h < 1.0:
            raise ValueError(f"h must lie in (0, 1), got {h}")
        self.particles = particles
        self.h = float(h)
        self.a = math.sqrt(1.0 - self.h * self.h)

    @property
    def n_particles(self) -> int:
        return len(self.particles)

    @property
    def n_arms(self) -> int:
        return self.particles[0].eta.n_arms

    @property
    def weights(self) -> np.ndarray:
        return np.array([p.weight for p in self.particles])

    @property
    def unconstrained(self) -> np.ndarray:
        """(N, d) matrix of particle coordinates."""
        return np.stack([p.z for p in self.particles])

    @property
    def eta_bar(self) -> np.ndarray:
        """Weighted mean of the unconstrained coordinates."""
        return self.weights @ self.unconstrained

    @property
    def cov(self) -> np.ndarray:
        """Weighted covariance of the unconstrained coordinates (no Bessel
        correction: this is the V that the shrinkage identity preserves)."""
        zs = self.unconstrained
        centered = zs - self.weights @ zs
        return (centered * self.weights[:, None]).T @ centered

    def to_json(self) -> str:
        # z is stored alongside eta: the pair is redundant analytically but
        # not in floating point, and the filter's shrinkage runs on z
        payload = {
            "h": self.h,
            "particles": [
                {
                    "weight": p.weight,
                    "eta": _eta_to_dict(p.eta),
                    "z": [float(v) for v in p.z],
                    "state": p.state.to_json(),
                }
                for p in self.particles
            ],
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "ParticleSet":
        payload = json.loads(text)
        particles = [
            Particle(
                eta=_eta_from_dict(rec["eta"]),
                state=CrfState.from_json(rec["state"]),
                weight=float(rec["weight"]),
                z=np.asarray(rec["z"], dtype=float) if "z" in rec else None,
            )
            for rec in payload["particles"]
        ]
        return cls(particles, h=float(payload["h"]))


def _eta_to_dict(eta: HpyParams) -> dict:
    return {
        "sigma": eta.root.sigma,
        "theta": eta.root.theta,
        "arms": [{"sigma": a.sigma, "theta": a.theta} for a in eta.arms],
    }


def _eta_from_dict(d: dict) -> HpyParams:
    return HpyParams(
        PyParams(float(d["sigma"]), float(d["theta"])),
        tuple(PyParams(float(a["sigma"]), float(a["theta"])) for a in d["arms"]),
    )


def effective_sample_size(ps: ParticleSet) -> float:
    """1 / sum of squared weights; equals N at uniform weights."""
    w = ps.weights
    return float(1.0 / np.sum(w * w))


def batch_loglik(
    eta: HpyParams,
    state: CrfState,
    batch: LabeledBatch | Sequence[LabeledBatch],
    rng: np.random.Generator,
) -> tuple[float, CrfState]:
    """Score a batch under one hyperparameter setting.

    Seats the observations sequentially on a copy of ``state``, sampling the
    table path and accumulating the log predictive probability of each
    observed label.  Returns (total log probability, seated copy).
    """
    seated = state.copy()
    total, _ = seated.seat_batch(batch, eta, rng)
    return total, seated


@dataclass(frozen=True)
class FilterDiagnostics:
    """Per-update health record."""

    ess_first_stage: float
    ess_second_stage: float
    jitter: float


def _shrink(
    zs: np.ndarray, weights: np.ndarray, h: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shrunk kernel locations plus the cloud mean and covariance.

    The mixture sum_i w_i Normal(m_i, h^2 V) has mean zbar and covariance
    a^2 V + h^2 V = V exactly, which is the point of the shrinkage.
    """
    a = math.sqrt(1.0 - h * h)
    zbar = weights @ zs
    centered = zs - zbar
    cov = (centered * weights[:, None]).T @ centered
    return a * zs + (1.0 - a) * zbar, zbar, cov


def _kernel_chol(cov: np.ndarray, h: float) -> tuple[np.ndarray, float]:
    """Cholesky factor of h^2 (V + eps I), escalating eps as needed."""
    d = cov.shape[0]
    trace = float(np.trace(cov))
    eps = 0.0
    for _ in range(14):
        try:
            lower = np.linalg.cholesky(h * h * (cov + eps * np.eye(d)))
            return lower, eps
        except np.linalg.LinAlgError:
            if eps == 0.0:
                eps = 1e-8 * trace / d if trace > 0.0 else 1e-8
            else:
                eps *= 10.0
    raise np.linalg.LinAlgError("covariance could not be regularized")


def _systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = weights.shape[0]
    positions = (rng.random() + np.arange(n)) / n
    idx = np.searchsorted(np.cumsum(weights), positions)
    return np.minimum(idx, n - 1)


def _normalize_log(logw: np.ndarray, what: str) -> np.ndarray:
    total = logsumexp(logw)
    if not np.isfinite(total):
        raise ValueError(f"every particle assigns zero likelihood to the batch ({what})")
    return np.exp(logw - total)


@dataclass(eq=False)
class _CoreResult:
    parents: np.ndarray
    proposals: np.ndarray
    survivors: np.ndarray
    children: list
    diagnostics: FilterDiagnostics


def _filter_core(
    zs: np.ndarray,
    weights: np.ndarray,
    h: float,
    eval_at: Callable[[int, np.ndarray, np.random.Generator], float],
    rng: np.random.Generator,
) -> _CoreResult:
    """One auxiliary shrinkage step in unconstrained coordinates.

    eval_at(i, z, stage_rng) scores the incoming batch at coordinates z
    against particle i's latent state; stage_rng is a dedicated child stream
    so the same sampled path can be replayed (stage two children are returned
    for exactly that purpose).  Stages: shrink, first-stage selection
    weights, per-slot parent draw, Gaussian proposal, second-stage
    reweighting, systematic resampling.
    """
    n, _ = zs.shape
    m, _, cov = _shrink(zs, weights, h)

    seed_root = np.random.SeedSequence(int(rng.integers(np.iinfo(np.int64).max)))
    kids = seed_root.spawn(2 * n)

    first = np.array(
        [eval_at(i, m[i], np.random.default_rng(kids[i])) for i in range(n)]
    )
    with np.errstate(divide="ignore"):
        logg = np.log(weights) + first
    g = _normalize_log(logg, "first stage")

    lower, eps = _kernel_chol(cov, h)
    parents = rng.choice(n, size=n, p=g)
    proposals = m[parents] + rng.standard_normal((n, zs.shape[1])) @ lower.T
    second = np.array(
        [
            eval_at(parents[s], proposals[s], np.random.default_rng(kids[n + s]))
            for s in range(n)
        ]
    )
    w2 = _normalize_log(second - first[parents], "second stage")
    survivors = _systematic_resample(w2, rng)
    diag = FilterDiagnostics(
        ess_first_stage=float(1.0 / np.sum(g * g)),
        ess_second_stage=float(1.0 / np.sum(w2 * w2)),
        jitter=eps,
    )
    return _CoreResult(parents, proposals, survivors, list(kids[n:]), diag)


def filter_update(
    ps: ParticleSet,
    batch: LabeledBatch | Sequence[LabeledBatch],
    rng: np.random.Generator,
) -> ParticleSet:
    """Advance the cloud by one observed batch; returns a fresh equal-weight set.

    Likelihood evaluations seat the batch on the particle's own state and
    roll back via the journal; only resampling survivors replay their seating
    for keeps (same child stream, hence the identical table path).  The
    returned set carries a ``diagnostics`` attribute.
    """
    n_arms = ps.n_arms
    states = [p.state for p in ps.particles]

    def eval_at(i: int, z: np.ndarray, stage_rng: np.random.Generator) -> float:
        params = from_unconstrained(z, n_arms)
        ll, journal = states[i].seat_batch(batch, params, stage_rng)
        states[i].rollback(journal)
        return ll

    res = _filter_core(ps.unconstrained, ps.weights, ps.h, eval_at, rng)

    n = ps.n_particles
    fresh: list[Particle] = []
    for s in res.survivors:
        parent = int(res.parents[s])
        params = from_unconstrained(res.proposals[s], n_arms)
        state = states[parent].copy()
        state.seat_batch(batch, params, np.random.default_rng(res.children[s]))
        fresh.append(Particle(eta=params, state=state, weight=1.0 / n, z=res.proposals[s].copy()))
    out = ParticleSet(fresh, h=ps.h)
    out.diagnostics = res.diagnostics
    return out


def kernel_filter_step(
    values: np.ndarray,
    weights: np.ndarray,
    h: float,
    loglik: Callable[[np.ndarray], float],
    rng: np.random.Generator,
) -> tuple[np.ndarray, FilterDiagnostics]:
    """One shrinkage-filter step for an arbitrary likelihood on R^d.

    Diagnostic hook: the same core as :func:`filter_update` but with no
    seating state, so the filter can be checked against conjugate posteriors
    (a Gaussian likelihood admits an exact Kalman answer).  ``values`` is
    (N,) or (N, d); returns the equal-weight resampled values in the same
    shape, plus diagnostics.
    """
    vals = np.asarray(values, dtype=float)
    flat = vals.ndim == 1
    zs = vals[:, None] if flat else vals
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()

    def eval_at(i: int, z: np.ndarray, stage_rng: np.random.Generator) -> float:
        return float(loglik(z))

    res = _filter_core(zs, w, h, eval_at, rng)
    out = res.proposals[res.survivors]
    return (out[:, 0] if flat else out), res.diagnostics
