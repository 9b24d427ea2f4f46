"""Independent brute-force validators for the numerical layers.

These deliberately avoid the training code paths: the tree oracle enumerates
every binomial path exactly, the backward-induction cross-check is a recursive
expectation, and the zero-volatility oracle solves the deterministic convex
program directly.  They exist to catch errors in the estimator, the rollout,
and the trained policies.
"""

from __future__ import annotations

import numpy as np

from .market import terminal_penalty_ell
from .training import roll_policy

MAX_TREE_DEPTH = 12


def binomial_price_matrix(mp):
    """All 2^N equiprobable price paths with +-sigma*sqrt(dt) increments."""
    N = mp.N
    if N > MAX_TREE_DEPTH:
        raise ValueError(f"refusing to enumerate 2^{N} paths (N > {MAX_TREE_DEPTH})")
    count = 2**N
    # bit n of the path index selects the sign of increment n
    bits = (np.arange(count)[:, None] >> np.arange(N)[None, :]) & 1
    signs = 2.0 * bits - 1.0
    incr = mp.sigma * np.sqrt(mp.dt) * signs
    prices = mp.S0 + np.concatenate(
        [np.zeros((count, 1)), np.cumsum(incr, axis=1)], axis=1
    )
    return prices


def enumerate_tree_objective(policy, spec, mp, gamma=0.0):
    """Exact relaxed mean-variance objective on the full binomial tree.

    Sums the relaxed mean and second moment over all 2^N equiprobable paths;
    no sampling error.  Returns (J, mean, second_moment).
    """
    prices = binomial_price_matrix(mp)
    rr = roll_policy(policy, prices, spec, mp)
    W = rr.weight_values()
    P = rr.pnl_values()
    per_path = (W * P).sum(axis=0)
    per_path2 = (W * P * P).sum(axis=0)
    mean = float(per_path.mean())
    m2 = float(per_path2.mean())
    J = mean - 0.5 * gamma * (m2 - mean * mean)
    return J, mean, m2


def sampled_tree_objective(policy, spec, mp, count, seed, gamma=0.0):
    """Monte-Carlo counterpart of the tree oracle on sampled binomial paths.

    Returns (J, standard_error_of_mean) for CLT comparisons against the exact
    enumeration.
    """
    gen = np.random.Generator(np.random.Philox(key=[0xB1A5, seed]))
    signs = 2.0 * gen.integers(0, 2, size=(count, mp.N)) - 1.0
    incr = mp.sigma * np.sqrt(mp.dt) * signs
    prices = mp.S0 + np.concatenate(
        [np.zeros((count, 1)), np.cumsum(incr, axis=1)], axis=1
    )
    rr = roll_policy(policy, prices, spec, mp)
    W = rr.weight_values()
    P = rr.pnl_values()
    per_path = (W * P).sum(axis=0)
    per_path2 = (W * P * P).sum(axis=0)
    mean = per_path.mean()
    m2 = per_path2.mean()
    J = mean - 0.5 * gamma * (m2 - mean * mean)
    se = per_path.std(ddof=1) / np.sqrt(count)
    return float(J), float(se)


def tree_backward_induction(policy, spec, mp):
    """Expected PnL of a hard (0/1) stopping policy by recursive expectation.

    An independent cross-check of the enumeration oracle for gamma = 0: walks
    the tree depth-first, taking the settlement branch whenever the policy's
    stopping probability is 1.
    """
    sdt = mp.sigma * np.sqrt(mp.dt)

    def value(n, S, A, X, q):
        settle = spec.exercise_allowed(n, mp.N) and n >= 1
        if settle:
            p = float(np.atleast_1d(
                policy.stop(n, np.array([S]), np.array([A]), np.array([X]),
                            np.array([q]))
            )[0]) if n < mp.N else 1.0
            if p not in (0.0, 1.0):
                raise ValueError("backward induction requires a hard policy")
            if p == 1.0 or n == mp.N:
                pnl = spec.pnl(
                    np.array([S]), np.array([A]), np.array([X]), np.array([q]), mp
                )
                return float(np.atleast_1d(pnl)[0])
        v = float(np.atleast_1d(
            policy.rate(n, np.array([S]), np.array([A]), np.array([X]),
                        np.array([q]))
        )[0])
        vol = mp.V[n]
        total = 0.0
        for sign in (-1.0, 1.0):
            S_next = S + sign * sdt
            q_next = q + v * mp.dt
            X_next = X + v * S_next * mp.dt + float(
                mp.exec_cost_L(v / vol)
            ) * vol * mp.dt
            A_next = A + (S_next - A) / (n + 1)
            total += 0.5 * value(n + 1, S_next, A_next, X_next, q_next)
        return total

    if mp.N > MAX_TREE_DEPTH:
        raise ValueError("tree too deep")
    return value(0, mp.S0, mp.S0, 0.0, 0.0)


def zero_vol_schedule(spec, mp, tol=1e-10, max_iter=200):
    """Optimal deterministic schedule for the fixed-share contract at sigma=0.

    Minimises sum_n L(v_n/V_n) V_n dt + ell(Q - sum_n v_n dt) by damped Newton
    descent down to gradient norm ``tol``.  Returns (rates, info) where info
    holds the total cost, the objective J = -cost, and convergence data.
    """
    if mp.sigma != 0:
        raise ValueError("zero_vol_schedule requires sigma = 0")
    Q = spec.terms.Q
    C = spec.penalty_C
    eta, ce, dt = mp.eta, mp.cost_exponent, mp.dt
    V = mp.V
    N = mp.N

    def cost(v):
        rho = v / V
        exec_cost = np.sum(eta * np.abs(rho) ** (1.0 + ce) * V * dt)
        resid = Q - np.sum(v) * dt
        return exec_cost + C * resid * resid

    def grad(v):
        rho = v / V
        dL = eta * (1.0 + ce) * np.abs(rho) ** ce * np.sign(rho)
        resid = Q - np.sum(v) * dt
        return dL * dt - 2.0 * C * resid * dt * np.ones(N)

    def hessian(v):
        rho = v / V
        with np.errstate(divide="ignore"):
            d2L = eta * (1.0 + ce) * ce * np.abs(rho) ** (ce - 1.0)
        d2L = np.minimum(d2L, 1e12)
        H = np.diag(d2L / V * dt)
        H += 2.0 * C * dt * dt
        return H

    v = np.full(N, 0.9 * Q / (N * dt))
    f = cost(v)
    iters = 0
    for iters in range(1, max_iter + 1):
        g = grad(v)
        gnorm = np.linalg.norm(g)
        if gnorm <= tol:
            break
        try:
            step = np.linalg.solve(hessian(v), g)
        except np.linalg.LinAlgError:
            step = g
        if not np.all(np.isfinite(step)) or np.dot(step, g) <= 0:
            step = g
        t = 1.0
        while t > 1e-16:
            v_new = v - t * step
            f_new = cost(v_new)
            if f_new <= f - 1e-4 * t * np.dot(g, step):
                break
            t *= 0.5
        v, f = v_new, f_new
    info = {
        "cost": float(cost(v)),
        "J": float(-cost(v)),
        "grad_norm": float(np.linalg.norm(grad(v))),
        "iterations": iters,
        "residual_shares": float(Q - np.sum(v) * dt),
    }
    return v, info


def bernoulli_identity_check(p_sequence, draws, seed=0):
    """Empirical vs analytic stopping weights for a probability sequence.

    Samples ``draws`` i.i.d. uniform sequences, stops each at the first index
    with eps <= p, and compares the stopping frequencies to the analytic
    weights prod_{k<n}(1 - p_k) p_n.  Returns (max_abs_deviation, empirical,
    analytic).  Requires the last probability to be 1 so the weights sum to 1.
    """
    p = np.asarray(p_sequence, dtype=np.float64)
    if p[-1] != 1.0:
        raise ValueError("the final stopping probability must be 1")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")
    n = len(p)
    analytic = np.empty(n)
    surv = 1.0
    for k in range(n):
        analytic[k] = surv * p[k]
        surv *= 1.0 - p[k]
    gen = np.random.Generator(np.random.Philox(key=[0xBE12, seed]))
    eps = gen.uniform(size=(draws, n))
    hit = eps <= p[None, :]
    first = np.argmax(hit, axis=1)  # last column always hits
    empirical = np.bincount(first, minlength=n) / draws
    return float(np.max(np.abs(empirical - analytic))), empirical, analytic
