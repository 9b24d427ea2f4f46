"""Settlement PnL of the three contracts under the naive trading schedule.

Run: python3 demos/02_contracts_and_naive_pnl.py
"""

import numpy as np

from buyback.contracts import (
    reference_fixed_notional,
    reference_fixed_shares,
    reference_profit_sharing,
)
from buyback.market import MarketParams, simulate_paths
from buyback.policy import naive_policy
from buyback.training import evaluate

mp = MarketParams(S0=45.0, sigma=0.6, N=63, V=4_000_000.0, eta=0.1)
batch = simulate_paths(mp, count=4096, seed=0)

print("naive schedule (hold to expiry) on 4096 paths:")
for spec in (reference_fixed_shares(), reference_fixed_notional(),
             reference_profit_sharing()):
    report = evaluate(naive_policy(spec, mp), spec, mp, batch, mode="relaxed")
    norm = spec.normalizer(mp)
    print(f"  {spec.kind:15s} mean = {report.mean:>12.0f} EUR "
          f"({100 * report.mean / norm:+.3f}% of notional), "
          f"std = {np.sqrt(report.variance):>12.0f} EUR")

# the fixed-shares payoff is indexed to the average price the bank itself
# realises, so the naive schedule is an almost perfect hedge at sigma = 0
flat = MarketParams(S0=45.0, sigma=0.0, N=63, V=4_000_000.0, eta=0.1)
spec = reference_fixed_shares()
report = evaluate(naive_policy(spec, flat), spec, flat,
                  simulate_paths(flat, 4, seed=0))
print(f"\nflat market: naive fixed-shares PnL = {report.mean:.0f} EUR "
      f"(pure execution cost, no price risk)")
