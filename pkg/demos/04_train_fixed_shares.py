"""Train the fixed-shares policy for a few hundred epochs and evaluate it.

A full reference run is 1000 epochs (about a minute per 100 epochs on one
core); this demo uses 300 to stay quick while still showing the shape of the
learning curve.  Run: python3 demos/04_train_fixed_shares.py
"""

import numpy as np

from buyback.contracts import reference_fixed_shares
from buyback.market import MarketParams, simulate_paths
from buyback.policy import naive_policy
from buyback.training import TrainConfig, evaluate, train

mp = MarketParams(S0=45.0, sigma=0.6, N=63, V=4_000_000.0, eta=0.1)
spec = reference_fixed_shares()
tc = TrainConfig(gamma=2.5e-7, batch_I=512, epochs=300, pretrain_epochs=100,
                 learning_rate=1e-3, seed=0, heldout_I=4096, eval_every=50)

print("training fixed-shares policy (gamma = 2.5e-7, 300 epochs)...")
params, curve, report = train(spec, mp, tc)

print("\nheld-out mean-variance score along the run:")
for epoch, phase, Jh in zip(curve.epochs, curve.phases, curve.J_heldout):
    if not np.isnan(Jh):
        print(f"  epoch {epoch + 1:>4d} ({phase:8s}): {100 * Jh:+.3f}% of Q S0")

norm = spec.normalizer(mp)
held = simulate_paths(mp, 4096, seed=1)
base = evaluate(naive_policy(spec, mp), spec, mp, held, gamma=tc.gamma)
print(f"\nfinal policy:   {100 * report.normalized:+.3f}% of Q S0 "
      f"(mean {report.mean:,.0f} EUR, std {np.sqrt(report.variance):,.0f})")
print(f"naive schedule: {100 * base.meanvar / norm:+.3f}% of Q S0 "
      f"(mean {base.mean:,.0f} EUR, std {np.sqrt(base.variance):,.0f})")
print("\nthe trained policy converts the buyer's optionality (when to stop,"
      "\nhow to lean on the average-vs-spot spread) into positive value")
