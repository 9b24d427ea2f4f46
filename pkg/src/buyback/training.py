"""Recurrent rollout, relaxed mean-variance objective, and gradient training.

A rollout iterates the state day by day, querying the trading policy for the
rate and the stopping policy for the exercise probability; the stopping weights
w_n = prod_{k<n}(1 - p_k) * p_n are accumulated multiplicatively and sum to one
on every path because the expiry probability is pinned to 1.  When the policy
weights are tape leaves the whole computation is differentiable end to end
through the recurrence (the inventory/cash fed back into the networks make the
structure recurrent).
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tape, backward
from .market import simulate_paths, step_state
from .params import AdamState, NonFiniteError, ParamStore, adam_step
from .policy import NetworkPolicy

NU_FLOOR = 1e-6


@dataclass
class TrainConfig:
    """Knobs of the (pretraining + main) gradient-ascent schedule."""

    gamma: float = 2.5e-7
    batch_I: int = 512
    epochs: int = 1000
    pretrain_epochs: int = 100
    learning_rate: float = 1e-3
    seed: int = 0
    pretrain_penalty_C: float | None = None
    heldout_I: int = 2**14
    eval_every: int = 50

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.pretrain_epochs > self.epochs:
            raise ValueError("pretrain_epochs cannot exceed epochs")
        if self.batch_I < 2:
            raise ValueError("batch_I must be at least 2 (variance term)")


@dataclass
class RolloutResult:
    """Per-settlement-day stopping weights and PnLs for one path batch."""

    settle_days: list
    weights: list  # one (I,) Var/array per settlement day
    pnls: list  # matching PnLs
    probs: list = field(default_factory=list)  # stopping probabilities p_n
    tape: Tape | None = None
    leaves: dict | None = None

    def weight_values(self):
        return np.stack([np.broadcast_to(ad.value_of(w), ad.value_of(self.pnls[0]).shape)
                         for w in self.weights])

    def pnl_values(self):
        return np.stack([ad.value_of(p) for p in self.pnls])


def _settlement_days(spec, mp):
    days = [n for n in range(1, mp.N) if spec.exercise_allowed(n, mp.N)]
    days.append(mp.N)
    return days


def roll_policy(policy, prices, spec, mp):
    """Run a policy over a price matrix (I, N+1) and collect settlement data.

    Returns a RolloutResult; differentiable when the policy holds tape Vars.
    """
    prices = np.atleast_2d(prices)
    settle = set(_settlement_days(spec, mp))
    S0 = prices[:, 0]
    state = (0, S0, S0.copy(), 0.0, 0.0)  # A_0 := S_0
    surv = 1.0
    days, weights, pnls, probs = [], [], [], []
    for n in range(mp.N + 1):
        _, S, A, X, q = state
        if n in settle:
            pnl = spec.pnl(S, A, X, q, mp)
            if n == mp.N:
                p = 1.0
                w = surv  # p_N := 1 exactly
            else:
                p = policy.stop(n, S, A, X, q)
                w = surv * p
                surv = surv * (1.0 - p)
            days.append(n)
            weights.append(w)
            pnls.append(pnl)
            probs.append(p)
        if n < mp.N:
            v = policy.rate(n, S, A, X, q)
            state = step_state(state, v, prices[:, n + 1], mp)
    return RolloutResult(days, weights, pnls, probs)


def rollout(batch, params, spec, mp):
    """Differentiable rollout of the network policy over a PathBatch.

    Records the whole computation on a fresh tape; the returned result carries
    the tape and the parameter leaves so gradients of any scalar formed from
    it can be pulled back to the ParamStore.
    """
    tape = Tape()
    leaves = {name: tape.leaf(params.arrays[name]) for name in params.names()}
    policy = NetworkPolicy(leaves, spec, mp)
    rr = roll_policy(policy, batch.prices, spec, mp)
    rr.tape = tape
    rr.leaves = leaves
    return rr


def objective_meanvar(rr, gamma):
    """Monte-Carlo mean-variance score of a rollout.

    J = mean_i sum_n w PnL - gamma/2 * [mean_i sum_n w PnL^2
                                        - (mean_i sum_n w PnL)^2]

    The second moment weights PnL^2 directly: it is the second moment of the
    relaxed settlement distribution, not of the per-path weighted mean.
    """
    wpnl = None
    wpnl2 = None
    for w, pnl in zip(rr.weights, rr.pnls):
        t1 = w * pnl
        t2 = w * pnl * pnl
        wpnl = t1 if wpnl is None else wpnl + t1
        wpnl2 = t2 if wpnl2 is None else wpnl2 + t2
    mean = ad.amean(wpnl)
    m2 = ad.amean(wpnl2)
    return mean - 0.5 * gamma * (m2 - mean * mean)


def rollout_gradients(rr, gamma):
    """Gradients of the mean-variance objective w.r.t. every parameter."""
    J = objective_meanvar(rr, gamma)
    backward(rr.tape, J)
    grads = {
        name: (leaf.grad if leaf.grad is not None else np.zeros_like(leaf.value))
        for name, leaf in rr.leaves.items()
    }
    return float(J.value), grads


@dataclass
class EvalReport:
    """Mean, variance and mean-variance score of a policy on a batch."""

    mean: float
    variance: float
    meanvar: float
    normalized: float
    mode: str
    count: int

    def to_dict(self):
        return dataclasses.asdict(self)


def _as_policy(params_or_policy, spec, mp):
    if isinstance(params_or_policy, ParamStore):
        return NetworkPolicy(params_or_policy.arrays, spec, mp)
    return params_or_policy


def sample_stop_days(weights_or_probs, seed):
    """Draw hard stopping days from per-day probabilities.

    ``weights_or_probs`` is a dict day -> p array (I,).  Each path stops at
    the first day whose uniform draw falls at or below its probability.
    """
    days = sorted(weights_or_probs)
    count = len(np.atleast_1d(weights_or_probs[days[0]]))
    gen = np.random.Generator(np.random.Philox(key=[0xE75, seed]))
    stop_day = np.full(count, days[-1])
    settled = np.zeros(count, dtype=bool)
    for n in days:
        p = np.broadcast_to(np.atleast_1d(weights_or_probs[n]), (count,))
        eps = gen.uniform(size=count)
        hit = (~settled) & (eps <= p)
        stop_day[hit] = n
        settled |= hit
    return stop_day


def evaluate(params, spec, mp, eval_paths, mode="relaxed", seed=0, gamma=0.0):
    """Score a policy on a path batch.

    ``relaxed`` uses the analytic stopping weights; ``sampled`` draws the
    uniform stopping variables and scores the realised settlements.
    """
    policy = _as_policy(params, spec, mp)
    rr = roll_policy(policy, eval_paths.prices, spec, mp)
    W = rr.weight_values()
    P = rr.pnl_values()
    if mode == "relaxed":
        per_path = (W * P).sum(axis=0)
        per_path2 = (W * P * P).sum(axis=0)
        mean = float(per_path.mean())
        m2 = float(per_path2.mean())
        var = m2 - mean * mean
    elif mode == "sampled":
        probs = {
            n: np.broadcast_to(np.atleast_1d(ad.value_of(p)), P[0].shape)
            for n, p in zip(rr.settle_days, rr.probs)
        }
        stop_day = sample_stop_days(probs, seed)
        idx = {n: i for i, n in enumerate(rr.settle_days)}
        sel = np.array([idx[d] for d in stop_day])
        realized = P[sel, np.arange(P.shape[1])]
        mean = float(realized.mean())
        var = float(realized.var())
    else:
        raise ValueError("mode must be 'relaxed' or 'sampled'")
    meanvar = mean - 0.5 * gamma * var
    return EvalReport(
        mean=mean,
        variance=var,
        meanvar=meanvar,
        normalized=meanvar / spec.normalizer(mp),
        mode=mode,
        count=eval_paths.count,
    )


@dataclass
class LearningCurve:
    """Per-epoch objective values; held-out scores where evaluated (else nan)."""

    epochs: list = field(default_factory=list)
    phases: list = field(default_factory=list)
    J: list = field(default_factory=list)
    J_normalized: list = field(default_factory=list)
    J_heldout: list = field(default_factory=list)

    def append(self, epoch, phase, J, J_norm, J_heldout=np.nan):
        self.epochs.append(epoch)
        self.phases.append(phase)
        self.J.append(J)
        self.J_normalized.append(J_norm)
        self.J_heldout.append(J_heldout)

    def save(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["epoch", "phase", "J", "J_normalized", "J_heldout"])
            for row in zip(
                self.epochs, self.phases, self.J, self.J_normalized, self.J_heldout
            ):
                epoch, phase, J, Jn, Jh = row
                writer.writerow(
                    [epoch, phase, f"{J:.10g}", f"{Jn:.10g}",
                     "" if np.isnan(Jh) else f"{Jh:.10g}"]
                )


def train(spec, mp, tc, initial=None, checkpoint_every=0, checkpoint_path=None):
    """Gradient-ascent training with an optional pretraining phase.

    The first ``tc.pretrain_epochs`` steps run with gamma forced to 0 (and the
    softened terminal penalty if configured); each step draws a fresh seeded
    path batch.  Returns (ParamStore, LearningCurve, EvalReport).  On a
    non-finite objective or gradient, training aborts and the last finite
    parameters are returned with the curve so far.
    """
    params = initial.copy() if initial is not None else ParamStore.initial(
        spec.kind, seed=tc.seed
    )
    state = AdamState(params)
    curve = LearningCurve()
    norm = spec.normalizer(mp)
    base = tc.seed * 2_000_003
    heldout = simulate_paths(mp, tc.heldout_I, seed=base + 1)

    pretrain_spec = spec
    if tc.pretrain_penalty_C is not None:
        pretrain_spec = dataclasses.replace(spec, penalty_C=tc.pretrain_penalty_C)

    last_good = params.copy()
    for epoch in range(tc.epochs):
        pretraining = epoch < tc.pretrain_epochs
        phase = "pretrain" if pretraining else "main"
        gamma_e = 0.0 if pretraining else tc.gamma
        spec_e = pretrain_spec if pretraining else spec
        batch = simulate_paths(mp, tc.batch_I, seed=base + 2 * (epoch + 1))
        try:
            rr = rollout(batch, params, spec_e, mp)
            J, grads = rollout_gradients(rr, gamma_e)
            if not np.isfinite(J):
                raise NonFiniteError(f"objective is {J} at epoch {epoch}")
            adam_step(params, grads, state, tc.learning_rate)
        except NonFiniteError:
            params = last_good
            break
        params.arrays["nu"] = np.maximum(params.arrays["nu"], NU_FLOOR)
        last_good = params.copy()

        Jh = np.nan
        evaluate_now = (
            tc.eval_every and (epoch + 1) % tc.eval_every == 0
        ) or epoch == tc.epochs - 1
        if evaluate_now:
            Jh = evaluate(
                params, spec, mp, heldout, mode="relaxed", gamma=tc.gamma
            ).normalized
        curve.append(epoch, phase, J, J / norm, Jh)
        if checkpoint_every and checkpoint_path and (epoch + 1) % checkpoint_every == 0:
            params.save(checkpoint_path)

    report = evaluate(params, spec, mp, heldout, mode="relaxed", gamma=tc.gamma)
    return params, curve, report


# -- strategy traces --------------------------------------------------------

TRACE_HEADER = [
    "path_id", "day", "price", "average", "inventory", "cash",
    "trade", "stop_prob", "stopped",
]


def rolled_trajectories(policy, prices, spec, mp):
    """Full state/decision record of a policy on a price matrix.

    Returns dict of arrays: S, A (I, N+1), X, q (I, N+1), v (I, N),
    p (I, N+1) with p = 0 off the exercise window and 1 at expiry.
    """
    prices = np.atleast_2d(prices)
    I, N = prices.shape[0], mp.N
    A = np.empty((I, N + 1))
    X = np.zeros((I, N + 1))
    q = np.zeros((I, N + 1))
    v = np.empty((I, N))
    p = np.zeros((I, N + 1))
    state = (0, prices[:, 0], prices[:, 0].copy(), np.zeros(I), np.zeros(I))
    A[:, 0] = state[2]
    for n in range(N + 1):
        _, S_n, A_n, X_n, q_n = state
        A[:, n], X[:, n], q[:, n] = A_n, X_n, q_n
        if n == N:
            p[:, n] = 1.0
        elif spec.exercise_allowed(n, N) and n >= 1:
            p[:, n] = np.broadcast_to(
                np.atleast_1d(policy.stop(n, S_n, A_n, X_n, q_n)), (I,)
            )
        if n < N:
            v_n = np.broadcast_to(
                np.atleast_1d(policy.rate(n, S_n, A_n, X_n, q_n)), (I,)
            )
            v[:, n] = v_n
            state = step_state(state, v_n, prices[:, n + 1], mp)
    return {"S": prices, "A": A, "X": X, "q": q, "v": v, "p": p}


def strategy_trace(policy, batch, spec, mp, seed=0):
    """Rows of the strategy-trace CSV with sampled (hard) stopping.

    After a path settles its trade column is zero and inventory/cash freeze at
    their settlement values.
    """
    traj = rolled_trajectories(policy, batch.prices, spec, mp)
    I, N = batch.count, mp.N
    settle = _settlement_days(spec, mp)
    probs = {n: traj["p"][:, n] for n in settle}
    stop_day = sample_stop_days(probs, seed)
    rows = []
    for i in range(I):
        sd = stop_day[i]
        for n in range(N + 1):
            frozen = n > sd
            day = min(n, sd)
            rows.append(
                {
                    "path_id": i,
                    "day": n,
                    "price": traj["S"][i, n],
                    "average": traj["A"][i, day],
                    "inventory": traj["q"][i, day],
                    "cash": traj["X"][i, day],
                    "trade": 0.0 if n >= sd or frozen else traj["v"][i, n],
                    "stop_prob": traj["p"][i, n],
                    "stopped": n >= sd,
                }
            )
    return rows, stop_day


def save_trace(path, rows):
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=TRACE_HEADER)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
