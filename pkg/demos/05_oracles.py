"""Brute-force oracles: exact tree enumeration, the deterministic convex
optimum, and the stopping-weight identity.

Run: python3 demos/05_oracles.py
"""

import numpy as np

from buyback.contracts import reference_fixed_shares
from buyback.market import MarketParams
from buyback.oracle import (
    bernoulli_identity_check,
    enumerate_tree_objective,
    sampled_tree_objective,
    tree_backward_induction,
    zero_vol_schedule,
)
from buyback.policy import NaivePolicy

# 1. exact enumeration of every +-sigma path on a short horizon, cross-checked
# two independent ways: Monte-Carlo sampling and recursive expectation
mp = MarketParams(S0=45.0, sigma=0.6, N=8, V=4_000_000.0, eta=0.1)
spec = reference_fixed_shares(first=3, last=7)
policy = NaivePolicy(spec, mp, exercise="when_complete")
J_exact, mean, _ = enumerate_tree_objective(policy, spec, mp)
J_rec = tree_backward_induction(policy, spec, mp)
print(f"8-day binomial tree, naive policy (path-independent by hedging):")
print(f"  exact enumeration (2^8 paths): J = {J_exact:,.1f}")
print(f"  recursive expectation:         J = {J_rec:,.1f}")

# an untrained network policy is path-dependent, so the Monte-Carlo
# estimator has real sampling error to compare against
from buyback.params import ParamStore
from buyback.policy import NetworkPolicy

params = ParamStore.initial("fixed_shares", seed=0)
params.arrays["nu"] = np.asarray(2.0)  # keep stopping probabilities interior
net = NetworkPolicy(params.arrays, spec, mp)
J_exact, _, _ = enumerate_tree_objective(net, spec, mp)
J_mc, se = sampled_tree_objective(net, spec, mp, count=200_000, seed=0)
print(f"untrained network policy on the same tree:")
print(f"  exact enumeration:             J = {J_exact:,.1f}")
print(f"  Monte-Carlo (200k paths):      J = {J_mc:,.1f} +- {se:,.1f} "
      f"({abs(J_mc - J_exact) / se:.2f} SE off)")

# 2. with sigma = 0 the fixed-shares problem is a deterministic convex
# program; Newton descent gives the optimal schedule to machine precision
mp0 = MarketParams(S0=45.0, sigma=0.0, N=63, V=4_000_000.0, eta=0.1)
rates, info = zero_vol_schedule(reference_fixed_shares(), mp0)
print(f"\nzero-volatility convex optimum:")
print(f"  cost = {info['cost']:,.1f} EUR, grad norm = {info['grad_norm']:.2e}, "
      f"{info['iterations']} Newton steps")
print(f"  schedule is near-uniform: rates in "
      f"[{rates.min():,.0f}, {rates.max():,.0f}] shares/day")

# 3. the relaxed stopping weights prod(1 - p_k) p_n are exactly the law of
# the first uniform draw below its threshold
dev, emp, ana = bernoulli_identity_check([0.3, 0.4, 1.0], draws=10**6, seed=0)
print(f"\nstopping-weight identity, p = (0.3, 0.4, 1):")
print(f"  analytic weights  {np.round(ana, 4)}")
print(f"  empirical (1e6)   {np.round(emp, 4)}")
print(f"  max deviation     {dev:.5f}")
