"""Simulate price paths, inspect running averages, and price execution costs.

Run: python3 demos/01_market_and_costs.py
"""

import numpy as np

from buyback.market import MarketParams, simulate_paths, stylized_paths

mp = MarketParams(S0=45.0, sigma=0.6, N=63, V=4_000_000.0, eta=0.1)

batch = simulate_paths(mp, count=10_000, seed=0)
print(f"simulated {batch.count} paths of {batch.n_days} days")
print(f"  S_0 = {batch.prices[0, 0]:.2f}")
print(f"  daily increment std = {np.std(np.diff(batch.prices, axis=1)):.4f} "
      f"(sigma = {mp.sigma})")
print(f"  terminal price spread: {batch.prices[:, -1].min():.2f} .. "
      f"{batch.prices[:, -1].max():.2f}")

# the running average A_n lags the spot: on a trending path the sign of
# A_n - S_n tells you which way the trend went
down = stylized_paths(mp, "down")
n = mp.N
print(f"\nstylized downward path: S_N = {down.prices[0, -1]:.2f}, "
      f"A_N = {down.averages[0, -1]:.2f} (average above spot)")

# execution cost L(rho) per share of market volume, as a function of the
# participation rate rho = v / V
print("\nper-day execution cost of buying Q/N shares a day at various rates:")
for frac in (0.5, 1.0, 2.0, 4.0):
    v = frac * 20_000_000 / mp.N
    rho = v / 4_000_000
    cost = float(mp.exec_cost_L(rho)) * 4_000_000
    print(f"  v = {v:>10.0f} shares/day (rho = {rho:.3f}): "
          f"EUR {cost:>10.0f} per day")
