"""Trained strategy behaviour on stylised trending paths.

Trains a quick fixed-shares model, then traces it on upward, downward and
v-shaped paths: on a falling price the average sits above the spot, the payoff
is in the money, and the policy accumulates fast and exercises early; on a
rising price it buys slowly and waits.  Run:

    python3 demos/06_stylized_trajectories.py
"""

from buyback.contracts import reference_fixed_shares
from buyback.market import MarketParams, stylized_paths
from buyback.policy import NetworkPolicy
from buyback.training import TrainConfig, strategy_trace, train

mp = MarketParams(S0=45.0, sigma=0.6, N=63, V=4_000_000.0, eta=0.1)
spec = reference_fixed_shares()
tc = TrainConfig(gamma=2.5e-7, batch_I=512, epochs=300, pretrain_epochs=100,
                 learning_rate=1e-3, seed=0, heldout_I=512, eval_every=0)
print("training a quick fixed-shares model (300 epochs)...")
params, _, _ = train(spec, mp, tc)
policy = NetworkPolicy(params.arrays, spec, mp)

for kind in ("up", "down", "v-shape"):
    batch = stylized_paths(mp, kind)
    rows, stop_day = strategy_trace(policy, batch, spec, mp, seed=0)
    sd = int(stop_day[0])
    bought = max(r["inventory"] for r in rows)
    half_day = next(r["day"] for r in rows
                    if r["inventory"] >= 0.5 * spec.terms.Q)
    print(f"{kind:8s}: settles day {sd:>2d}/{mp.N}, "
          f"half the block bought by day {half_day:>2d}, "
          f"final inventory {bought / spec.terms.Q:.1%} of Q")
