"""Posterior reward forecasts: how many new species a batch should find.

The discovery reward of pulling an arm is the number of previously unseen
species in the batch.  Conditional on the seating state, the posterior mass
on unseen species decomposes into a shared top-level Beta draw and one Beta
draw per arm; given those, the expected number of new distinct species in a
batch of fixed size has a closed form built from the distinct-count law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .crf import CrfState, HpyParams
from .pyp import GfcTable, shared_gfc

_EPS = 1e-12


def sample_root_new_mass(state: CrfState, params: HpyParams, rng: np.random.Generator) -> float:
    """Draw the posterior probability that a brand-new table serves a
    brand-new dish: Beta(theta + K sigma, tables - sigma K) at the top level.

    Requires a non-empty state; with no dishes observed there is nothing to
    condition on and callers must warm-start first.
    """
    k = state.n_dishes
    if k == 0:
        raise ValueError("state has no observations; warm-start each arm before forecasting")
    m = state.total_tables
    rp = params.root
    draw = rng.beta(rp.theta + k * rp.sigma, m - rp.sigma * k)
    return float(min(max(draw, _EPS), 1.0 - _EPS))


def sample_arm_new_mass(
    state: CrfState,
    params: HpyParams,
    arm: int,
    root_new_mass: float,
    rng: np.random.Generator,
) -> float:
    """Draw the arm-level posterior probability that the next observation is
    a species never seen in any arm.

    The arm's random measure concentrates (theta_j + sigma_j m_j) of fresh
    mass around the shared measure, of which a ``root_new_mass`` fraction is
    new; the rest of the posterior mass sits on the arm's own tables.
    """
    ap = params.arms[arm]
    fresh = ap.theta + ap.sigma * state.arm_tables(arm)
    a = fresh * root_new_mass
    b = fresh * (1.0 - root_new_mass) + state.arm_customers(arm) - ap.sigma * state.arm_tables(arm)
    draw = rng.beta(a, b)
    return float(min(max(draw, _EPS), 1.0 - _EPS))


def expected_new_species(
    budget: int,
    root_new_mass: float,
    arm_new_mass: float,
    params: HpyParams,
    n_dishes: int,
    arm_tables: int,
    table: GfcTable | None = None,
) -> float:
    """Expected number of new distinct species in a batch of ``budget`` draws
    from one arm, given the two unseen-mass draws.

    Each draw independently lands on unseen mass with probability
    ``arm_new_mass``; the i draws that do so contribute distinct species
    according to the distinct-count law under the updated strength
    (theta_j-free: the top level governs novelty), tilted by how much new
    top-level mass each fresh dish consumes:

        (theta + K sigma) / sigma * ( sum_i Binom(i | budget, p)
            * sum_m F(i, m; sigma, beta0 (theta + arm_tables))
            * (theta + K sigma + sigma)_m / (theta + K sigma)_m
            - P(Binom >= 1) )

    Everything is evaluated in log space and the result is clamped to
    [0, budget]; the raw value is asserted non-negative to 1e-8.
    """
    if budget < 0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    if budget == 0:
        return 0.0
    p = arm_new_mass
    if not 0.0 <= p < 1.0:
        raise ValueError(f"arm_new_mass must lie in [0, 1), got {p}")
    if p == 0.0:
        return 0.0
    rp = params.root
    sigma, theta = rp.sigma, rp.theta
    theta_upd = (theta + arm_tables) * root_new_mass
    if not theta_upd > 0.0:
        raise ValueError("root_new_mass must be positive")
    m = budget
    if table is None:
        table = shared_gfc(sigma, m)
    if table.sigma != sigma or table.n_max < m:
        raise ValueError("coefficient table does not cover this sigma / budget")

    base = theta + n_dishes * sigma
    mt = np.arange(1.0, m + 1.0)
    # rising[j-1] = sum_{r=1}^{j-1} log(theta_upd + r sigma)
    rising = np.concatenate(
        ([0.0], np.cumsum(np.log(theta_upd + sigma * np.arange(1, m))))
    )
    # log (base + sigma)_j - log (base)_j, index j-1
    log_tilt = np.cumsum(np.log(base + sigma + np.arange(m)) - np.log(base + np.arange(m)))
    logden = gammaln(theta_upd + np.arange(1, m + 1)) - gammaln(theta_upd + 1.0)
    log_f = (
        rising[None, :]
        + table.log_values[1 : m + 1, 1 : m + 1]
        - mt[None, :] * math.log(sigma)
        - logden[:, None]
    )
    inner = np.exp(log_f + log_tilt[None, :]).sum(axis=1)

    i = np.arange(1.0, m + 1.0)
    log_binom = (
        gammaln(m + 1.0)
        - gammaln(i + 1.0)
        - gammaln(m - i + 1.0)
        + i * math.log(p)
        + (m - i) * math.log1p(-p)
    )
    hit_any = -math.expm1(m * math.log1p(-p))  # P(at least one draw on new mass)
    raw = base / sigma * (float(np.exp(log_binom) @ inner) - hit_any)
    assert raw >= -1e-8, f"expected-new-species formula went negative: {raw}"
    assert raw <= m * (1.0 + 1e-9) + 1e-9, f"expected new species {raw} exceeds budget {m}"
    return min(max(raw, 0.0), float(m))


@dataclass(eq=False)
class RewardDraw:
    """One Thompson draw: sampled unseen masses and the per-arm forecast."""

    root_new_mass: float
    arm_new_mass: np.ndarray
    expected_new: np.ndarray
    budget: int


def _pick_state(source, rng) -> tuple[CrfState, HpyParams]:
    particles = getattr(source, "particles", None)
    if particles is not None:
        w = np.asarray([p.weight for p in particles])
        idx = int(rng.choice(len(particles), p=w / w.sum()))
        p = particles[idx]
        return p.state, p.eta
    state, params = source
    return state, params


def thompson_draw(source, budget: int, rng: np.random.Generator) -> RewardDraw:
    """Sample one posterior scenario and forecast every arm under it.

    ``source`` is either a particle set (a particle is drawn by weight) or a
    (state, params) pair.
    """
    state, params = _pick_state(source, rng)
    root = sample_root_new_mass(state, params, rng)
    table = shared_gfc(params.root.sigma, max(budget, 1))
    n_arms = state.n_arms
    arm_mass = np.empty(n_arms)
    expected = np.empty(n_arms)
    for j in range(n_arms):
        arm_mass[j] = sample_arm_new_mass(state, params, j, root, rng)
        expected[j] = expected_new_species(
            budget, root, arm_mass[j], params, state.n_dishes, state.arm_tables(j), table
        )
    return RewardDraw(root, arm_mass, expected, budget)


@dataclass(frozen=True)
class ForecastSummary:
    """Posterior summary of expected new species for one arm and budget."""

    arm: int
    budget: int
    mean: float
    quantiles: dict = field(hash=False)
    n_draws: int


def posterior_mean_forecast(
    source,
    arm: int,
    budget: int,
    n_draws: int,
    rng: np.random.Generator,
    quantiles: tuple[float, ...] = (0.1, 0.5, 0.9),
) -> ForecastSummary:
    """Average the expected-new-species forecast over posterior draws."""
    if n_draws < 1:
        raise ValueError(f"n_draws must be >= 1, got {n_draws}")
    vals = np.empty(n_draws)
    for d in range(n_draws):
        state, params = _pick_state(source, rng)
        root = sample_root_new_mass(state, params, rng)
        p = sample_arm_new_mass(state, params, arm, root, rng)
        vals[d] = expected_new_species(
            budget, root, p, params, state.n_dishes, state.arm_tables(arm)
        )
    qs = {float(q): float(np.quantile(vals, q)) for q in quantiles}
    return ForecastSummary(arm, budget, float(vals.mean()), qs, n_draws)
