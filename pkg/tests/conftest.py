"""Shared test oracles: brute-force enumeration and simulation helpers.

Everything here is written independently of the library internals (plain
Python loops, direct probability formulas) so the tests compare two separate
routes to the same quantity.
"""
from __future__ import annotations

import math
from itertools import product

import numpy as np


def set_partitions(items):
    """Yield every partition of ``items`` as a list of lists (blocks)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [part[i] + [first]] + part[i + 1 :]
        yield part + [[first]]


def simulate_crp_distinct(n, sigma, theta, n_sims, rng):
    """Sample the number of distinct values in n draws by running the
    sequential seating rule; returns an integer array of length n_sims."""
    k = np.ones(n_sims, dtype=np.int64)
    for m in range(1, n):
        p_new = (theta + k * sigma) / (theta + m)
        k += rng.random(n_sims) < p_new
    return k


def _stick_truncation(n, sigma, theta, bias_budget=1e-7):
    """Smallest power-of-two atom count whose tail-collision bias bound,
    pairs * E[tail_mass^2] * (1 - sigma) / (theta + m sigma + 1), is within
    budget.  Uses the exact Beta moments of the stick fractions."""
    pairs = n * (n - 1) / 2.0
    m = 1024
    while m <= 2**22:
        ks = np.arange(1, m + 1)
        b = theta + ks * sigma
        log_t2 = np.sum(
            np.log(b) + np.log(b + 1.0) - np.log(b + 1.0 - sigma) - np.log(b + 2.0 - sigma)
        )
        bound = pairs * math.exp(log_t2) * (1.0 - sigma) / (theta + m * sigma + 1.0)
        if bound < bias_budget:
            return m
        m *= 2
    raise RuntimeError("could not find a workable truncation")


def simulate_stick_distinct(n, sigma, theta, n_sims, rng, block=2048):
    """Sample distinct counts by drawing the random measure itself.

    Each simulation draws stick-breaking weights to a truncation deep enough
    that two draws landing beyond it collide with probability far below the
    Monte-Carlo noise; draws past the truncation are therefore counted as
    fresh distinct values.
    """
    m = _stick_truncation(n, sigma, theta)
    ks = np.arange(1, m + 1)
    out = np.empty(n_sims, dtype=np.int64)
    done = 0
    while done < n_sims:
        b = min(block, n_sims - done)
        v = rng.beta(1.0 - sigma, theta + sigma * ks, size=(b, m))
        w = np.empty_like(v)
        w[:, 0] = v[:, 0]
        np.multiply(v[:, 1:], np.cumprod(1.0 - v[:, :-1], axis=1), out=w[:, 1:])
        cumw = np.cumsum(w, axis=1)
        u = rng.random((b, n))
        for r in range(b):
            idx = np.searchsorted(cumw[r], u[r], side="right")
            inside = idx[idx < m]
            out[done + r] = len(np.unique(inside)) + int(np.sum(idx >= m))
        done += b
    return out


def naive_distinct_law(n, k, sigma, theta):
    """Plain-float distinct-count probability, direct products throughout."""
    c = {(0, 0): 1.0}
    for nn in range(1, n + 1):
        for kk in range(1, nn + 1):
            c[(nn, kk)] = sigma * c.get((nn - 1, kk - 1), 0.0) + (
                nn - 1 - kk * sigma
            ) * c.get((nn - 1, kk), 0.0)
    num = 1.0
    for i in range(1, k):
        num *= theta + i * sigma
    den = 1.0
    for i in range(1, n):
        den *= theta + i
    return num * c[(n, k)] / sigma**k / den


def naive_expected_new(m_budget, root_mass, arm_mass, sigma, theta, n_dishes, arm_tables):
    """Independent implementation of the batch discovery forecast: explicit
    double sum with naive-precision pieces."""
    theta_upd = (theta + arm_tables) * root_mass
    total = 0.0
    for i in range(1, m_budget + 1):
        binom = math.comb(m_budget, i) * arm_mass**i * (1 - arm_mass) ** (m_budget - i)
        inner = 0.0
        for mt in range(1, i + 1):
            f = naive_distinct_law(i, mt, sigma, theta_upd)
            num = den = 1.0
            for r in range(mt):
                num *= theta + n_dishes * sigma + sigma + r
                den *= theta + n_dishes * sigma + r
            inner += f * num / den
        total += binom * inner
    total -= 1.0 - (1.0 - arm_mass) ** m_budget
    return (theta + n_dishes * sigma) / sigma * total


def simulate_batch_discoveries(canonical, params, arm, m_budget, n_sims, rng):
    """Forward-simulate the seating process ``m_budget`` steps in one arm and
    count brand-new dishes; independent of the library state machinery.

    ``canonical`` is the id-free state description {arms, seating}; ``params``
    carries .root / .arms with .sigma / .theta fields.
    """
    sigma, theta = params.root.sigma, params.root.theta
    asig, athe = params.arms[arm].sigma, params.arms[arm].theta
    labels = sorted({lab for per in canonical["seating"] for lab in per})
    dish_ix = {lab: i for i, lab in enumerate(labels)}
    dish0 = [0] * len(labels)
    tab0 = []  # (occupancy, dish index) for the sampled arm only
    n0 = 0
    for j, per in enumerate(canonical["seating"]):
        for lab, occs in per.items():
            dish0[dish_ix[lab]] += len(occs)
            if j == arm:
                for occ in occs:
                    tab0.append([occ, dish_ix[lab]])
                    n0 += occ
    m_all0 = sum(dish0)
    out = np.empty(n_sims, dtype=np.int64)
    us = rng.random((n_sims, m_budget, 2))
    for s in range(n_sims):
        tables = [t[:] for t in tab0]
        dishes = dish0[:]
        n_j = n0
        m_all = m_all0
        k_all = len(dishes)
        new = 0
        for step in range(m_budget):
            r = us[s, step, 0] * (athe + n_j)
            acc = 0.0
            joined = False
            for t in tables:
                acc += t[0] - asig
                if r < acc:
                    t[0] += 1
                    joined = True
                    break
            if not joined:
                # open a table; pick its dish at the top level
                r2 = us[s, step, 1] * (theta + m_all)
                acc2 = 0.0
                dish = -1
                for d, md in enumerate(dishes):
                    acc2 += md - sigma
                    if r2 < acc2:
                        dish = d
                        break
                if dish < 0:
                    dishes.append(0)
                    dish = len(dishes) - 1
                    k_all += 1
                    new += 1
                dishes[dish] += 1
                tables.append([1, dish])
                m_all += 1
            n_j += 1
        out[s] = new
    return out


def make_params(n_arms, sigma=0.5, theta=1.0, arm_sigma=0.5, arm_theta=1.0):
    from hpybandit.crf import HpyParams
    from hpybandit.pyp import PyParams

    return HpyParams(
        root=PyParams(sigma, theta),
        arms=tuple(PyParams(arm_sigma, arm_theta) for _ in range(n_arms)),
    )


def seeded_state(n_arms=2, n_obs=14, seed=5, n_labels=4):
    from hpybandit.crf import CrfState

    rng = np.random.default_rng(seed)
    p = make_params(n_arms)
    s = CrfState(n_arms)
    labels = [f"sp{i}" for i in range(n_labels)]
    for arm in range(n_arms):
        s.seat(arm, labels[arm % n_labels], p, rng=rng)
    for _ in range(n_obs - n_arms):
        s.seat(int(rng.integers(n_arms)), labels[rng.integers(n_labels)], p, rng=rng)
    return s, p


def generate_crf_data(params, n_per_arm, rng, prefix="sp"):
    """Forward-sample labels from the two-level seating process.

    Independent of the library state machinery: plain lists track table
    counts per arm and table counts per dish.  Returns one list of labels
    per arm.
    """
    sigma, theta = params.root.sigma, params.root.theta
    dish_tables = []  # m_.k
    arm_tables = [[] for _ in range(params.n_arms)]  # [count, dish]
    out = [[] for _ in range(params.n_arms)]
    for j, n_j in enumerate(n_per_arm):
        asig, athe = params.arms[j].sigma, params.arms[j].theta
        for _ in range(n_j):
            n = len(out[j])
            r = rng.random() * (athe + n)
            acc = 0.0
            dish = -1
            for t in arm_tables[j]:
                acc += t[0] - asig
                if r < acc:
                    t[0] += 1
                    dish = t[1]
                    break
            if dish < 0:
                m_all = sum(dish_tables)
                r2 = rng.random() * (theta + m_all)
                acc2 = 0.0
                for d, md in enumerate(dish_tables):
                    acc2 += md - sigma
                    if r2 < acc2:
                        dish = d
                        break
                if dish < 0:
                    dish = len(dish_tables)
                    dish_tables.append(0)
                dish_tables[dish] += 1
                arm_tables[j].append([1, dish])
            out[j].append(f"{prefix}{dish}")
    return out
