"""Brute-force validators: tree enumeration, convex schedule, identity check."""

import numpy as np
import pytest

from buyback.contracts import reference_fixed_shares
from buyback.market import MarketParams
from buyback.oracle import (
    bernoulli_identity_check,
    binomial_price_matrix,
    enumerate_tree_objective,
    sampled_tree_objective,
    tree_backward_induction,
    zero_vol_schedule,
)
from buyback.params import ParamStore
from buyback.policy import NaivePolicy, NetworkPolicy, naive_policy
from buyback.training import objective_meanvar, roll_policy


def small_setup(N=3, sigma=0.6):
    mp = MarketParams(S0=45.0, sigma=sigma, N=N, V=4e6)
    spec = reference_fixed_shares(first=1, last=N - 1)
    return mp, spec


def test_binomial_matrix_enumerates_all_sign_patterns():
    mp, _ = small_setup(N=3)
    prices = binomial_price_matrix(mp)
    assert prices.shape == (8, 4)
    increments = np.diff(prices, axis=1) / (mp.sigma * np.sqrt(mp.dt))
    patterns = {tuple(row) for row in np.round(increments).astype(int)}
    assert len(patterns) == 8
    assert all(set(p) <= {-1, 1} for p in patterns)


def test_tree_depth_guard():
    mp = MarketParams(S0=45.0, sigma=0.6, N=20, V=4e6)
    spec = reference_fixed_shares(first=1, last=19)
    with pytest.raises(ValueError):
        enumerate_tree_objective(naive_policy(spec, mp), spec, mp)


def test_zero_volatility_tree_is_a_single_rollout():
    mp, spec = small_setup(N=3, sigma=0.0)
    policy = naive_policy(spec, mp)
    J_tree, _, _ = enumerate_tree_objective(policy, spec, mp)
    flat = np.full((1, 4), 45.0)
    J_direct = float(objective_meanvar(roll_policy(policy, flat, spec, mp), 0.0))
    assert J_tree == pytest.approx(J_direct, rel=1e-12)


def test_n3_naive_equals_hand_enumeration():
    # loop-based recomputation of the 8-path average, written independently
    mp, spec = small_setup(N=3)
    policy = naive_policy(spec, mp)
    J_tree, mean_tree, _ = enumerate_tree_objective(policy, spec, mp)
    Q, N, V = spec.terms.Q, 3, 4e6
    sdt = mp.sigma
    total = 0.0
    for bits in range(8):
        S = [45.0]
        for n in range(3):
            S.append(S[-1] + (1.0 if (bits >> n) & 1 else -1.0) * sdt)
        A = [sum(S[1 : n + 1]) / n for n in range(1, 4)]
        q = X = 0.0
        for n in range(3):
            v = Q * (n + 1) / N - q
            q += v
            X += v * S[n + 1] + 0.1 * abs(v / V) ** 1.75 * V
        pnl = Q * A[-1] - X - (Q - q) * S[-1] - spec.penalty_C * (Q - q) ** 2
        total += pnl / 8
    assert mean_tree == pytest.approx(total, rel=1e-12)
    assert J_tree == pytest.approx(total, rel=1e-12)


def test_monte_carlo_within_four_standard_errors():
    mp, spec = small_setup(N=8)
    spec = reference_fixed_shares(first=3, last=7)
    params = ParamStore.initial("fixed_shares", seed=13)
    policy = NetworkPolicy(params.arrays, spec, mp)
    J_exact, _, _ = enumerate_tree_objective(policy, spec, mp)
    J_mc, se = sampled_tree_objective(policy, spec, mp, 10**6, seed=7)
    assert abs(J_mc - J_exact) < 4 * se


def test_backward_induction_cross_checks_enumeration():
    mp, spec = small_setup(N=6)
    spec = reference_fixed_shares(first=2, last=5)
    for exercise in ("never", "when_complete"):
        policy = NaivePolicy(spec, mp, exercise=exercise)
        J_tree, mean_tree, _ = enumerate_tree_objective(policy, spec, mp)
        J_rec = tree_backward_induction(policy, spec, mp)
        assert J_rec == pytest.approx(mean_tree, rel=1e-10)


def test_backward_induction_rejects_soft_policy():
    mp, spec = small_setup(N=3)
    params = ParamStore.initial("fixed_shares", seed=0)
    params.arrays["nu"] = np.asarray(0.1)  # soft interior probabilities
    policy = NetworkPolicy(params.arrays, spec, mp)
    with pytest.raises(ValueError):
        tree_backward_induction(policy, spec, mp)


def test_zero_vol_schedule_stationary():
    mp = MarketParams(S0=45.0, sigma=0.0, N=63, V=4e6)
    spec = reference_fixed_shares()
    rates, info = zero_vol_schedule(spec, mp)
    assert info["grad_norm"] <= 1e-10
    assert rates.shape == (63,)
    assert np.all(rates > 0)


def test_zero_vol_schedule_infinite_penalty_limit():
    # huge C: schedule sums exactly to Q with equal rates Q/(N dt)
    mp = MarketParams(S0=45.0, sigma=0.0, N=63, V=4e6)
    spec = reference_fixed_shares(penalty_C=1e3)
    rates, info = zero_vol_schedule(spec, mp)
    assert abs(info["residual_shares"]) < 1.0
    assert np.allclose(rates, 2e7 / 63, rtol=1e-6)


def test_zero_vol_schedule_small_eta_limit():
    # eta -> 0 with finite C: the residual vanishes
    mp = MarketParams(S0=45.0, sigma=0.0, N=63, V=4e6, eta=1e-8)
    spec = reference_fixed_shares()
    _, info = zero_vol_schedule(spec, mp)
    assert abs(info["residual_shares"]) < 1e-3 * spec.terms.Q


def test_zero_vol_cost_matches_closed_form():
    # near-uniform optimum: cost close to the naive closed form
    mp = MarketParams(S0=45.0, sigma=0.0, N=63, V=4e6)
    spec = reference_fixed_shares()
    rates, info = zero_vol_schedule(spec, mp)
    rho = rates / 4e6
    direct = float(np.sum(0.1 * rho**1.75 * 4e6)) + spec.penalty_C * (
        2e7 - rates.sum()
    ) ** 2
    assert info["cost"] == pytest.approx(direct, rel=1e-6)
    naive_cost = 63 * 0.1 * ((2e7 / 63) / 4e6) ** 1.75 * 4e6
    assert info["cost"] <= naive_cost * (1 + 1e-12)
    assert info["cost"] == pytest.approx(naive_cost, rel=1e-2)


def test_zero_vol_requires_flat_market():
    mp = MarketParams(S0=45.0, sigma=0.6, N=63, V=4e6)
    with pytest.raises(ValueError):
        zero_vol_schedule(reference_fixed_shares(), mp)


def test_bernoulli_identity_degenerate():
    dev, emp, ana = bernoulli_identity_check([1.0], draws=10)
    assert dev == 0.0
    assert emp[0] == 1.0 and ana[0] == 1.0


def test_bernoulli_identity_two_step():
    dev, emp, ana = bernoulli_identity_check([0.5, 1.0], draws=10**6, seed=3)
    assert np.allclose(ana, [0.5, 0.5])
    assert dev < 0.002


def test_bernoulli_identity_three_step():
    dev, emp, ana = bernoulli_identity_check([0.3, 0.4, 1.0], draws=10**6,
                                             seed=4)
    assert np.allclose(ana, [0.3, 0.28, 0.42])
    assert dev < 0.002


def test_bernoulli_identity_validation():
    with pytest.raises(ValueError):
        bernoulli_identity_check([0.5, 0.5], draws=10)
    with pytest.raises(ValueError):
        bernoulli_identity_check([1.5, 1.0], draws=10)
