"""Seating predictive rules and the distinct-count law, single population.

Three views of the same two-parameter family: the sequential predictive
weights, the exact law for how many distinct species n draws contain, and a
quick simulation check that the two agree.
"""

import numpy as np

from hpybandit import PyParams, crp_predictive, distinct_count_pmf, stick_breaking_sample

rng = np.random.default_rng(0)
p = PyParams(sigma=0.5, theta=1.0)

# predictive weights after observing cluster sizes (3, 1): each existing
# cluster is discounted by sigma, the remainder goes to a brand-new species
weights = crp_predictive([3, 1], p)
print("cluster sizes (3, 1):")
print(f"  join first   {weights[0]:.4f}")
print(f"  join second  {weights[1]:.4f}")
print(f"  new species  {weights[-1]:.4f}")

# the distinct-count law: P(K_n = k) for n draws
n = 12
law = distinct_count_pmf(n, p)
print(f"\ndistinct species among {n} draws:")
for k in (1, 3, 6, 9, 12):
    print(f"  P(K = {k:2d}) = {law[k - 1]:.5f}")
print(f"  E[K]      = {law @ np.arange(1, n + 1):.3f}")

# simulate the seating process and compare the mean
sims = np.ones(50_000, dtype=int)
for m in range(1, n):
    p_new = (p.theta + sims * p.sigma) / (p.theta + m)
    sims += rng.random(50_000) < p_new
print(f"  simulated = {sims.mean():.3f}  (50k seating runs)")

# stick-breaking view: the random measure behind the seating rule.
# Weights decay polynomially; theta shifts mass toward the tail.
w = stick_breaking_sample(p, truncation=8, rng=rng)
print("\none draw of the first 8 stick weights:")
print("  " + " ".join(f"{x:.3f}" for x in w))
print(f"  tail mass beyond truncation: {1 - w.sum():.3f}")
