"""Finite-difference verification of rollout gradients.

Central differences with an absolute step; coordinates whose difference
quotient is unstable across step sizes sit next to a kink (relu / clamp /
clipped-logistic boundary) and are excluded, as a one-sided subgradient cannot
match a two-sided quotient there.  A genuine gradient bug produces a *stable*
quotient that disagrees with the tape, which is never excluded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .training import objective_meanvar, roll_policy, rollout, rollout_gradients
from .policy import NetworkPolicy


def objective_value(params, batch, spec, mp, gamma):
    """Tape-free evaluation of the training objective (the FD oracle)."""
    policy = NetworkPolicy(params.arrays, spec, mp)
    rr = roll_policy(policy, batch.prices, spec, mp)
    return float(objective_meanvar(rr, gamma))


@dataclass
class GradCheckResult:
    max_rel_err: float
    worst_name: str
    checked: int
    excluded: int

    @property
    def excluded_fraction(self):
        return self.excluded / max(1, self.checked + self.excluded)


def check_gradients(
    params, batch, spec, mp, gamma=0.0, step=1e-5, rtol=1e-5, kink_rtol=1e-3
):
    """Compare tape gradients of the objective against central differences.

    Returns a GradCheckResult with the worst relative error over all
    non-excluded parameter coordinates.
    """
    rr = rollout(batch, params, spec, mp)
    _, grads = rollout_gradients(rr, gamma)
    flat_params = params.to_flat()
    flat_grads = np.concatenate(
        [np.asarray(grads[n]).ravel() for n in params.names()]
    )
    names = []
    for n in params.names():
        names.extend([n] * params.arrays[n].size)

    def fd(j, h):
        bumped = flat_params.copy()
        bumped[j] += h
        up = objective_value(params.from_flat(bumped), batch, spec, mp, gamma)
        bumped[j] -= 2 * h
        down = objective_value(params.from_flat(bumped), batch, spec, mp, gamma)
        return (up - down) / (2 * h)

    scale = max(1.0, abs(objective_value(params, batch, spec, mp, gamma)))
    # floor the relative-error denominator at a fraction of the gradient
    # vector's scale: on coordinates a thousand times smaller than the largest
    # gradient the quotient is roundoff-bound, and an absolute agreement at
    # that scale is as good as the arithmetic allows
    floor = max(1e-8 * scale, 1e-3 * np.abs(flat_grads).max())
    max_rel = 0.0
    worst = ""
    checked = excluded = 0
    for j in range(flat_params.size):
        est = fd(j, step)
        denom = max(abs(est), abs(flat_grads[j]), floor)
        rel = abs(est - flat_grads[j]) / denom
        if rel > rtol:
            # unstable quotient across step sizes -> kink in the window
            est_small = fd(j, step / 100.0)
            denom2 = max(abs(est), abs(est_small), floor)
            if abs(est - est_small) / denom2 > kink_rtol:
                excluded += 1
                continue
            rel = abs(est_small - flat_grads[j]) / max(
                abs(est_small), abs(flat_grads[j]), floor
            )
        checked += 1
        if rel > max_rel:
            max_rel = rel
            worst = names[j]
    return GradCheckResult(max_rel, worst, checked, excluded)
