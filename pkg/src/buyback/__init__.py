"""Optimal execution and exercise of share-buyback contracts with neural policies.

The library trains two small neural networks -- a trading policy and a relaxed
stochastic stopping policy -- against a Monte-Carlo mean-variance objective, for
three contract types: ASR with a fixed number of shares, ASR with a fixed
notional, and a VWAP-minus profit-sharing contract.
"""

from .autodiff import Tape, Var, backward, clipped_logistic
from .params import ParamStore, AdamState, adam_step
from .market import MarketParams, PathBatch, simulate_paths, stylized_paths
from .contracts import (
    ContractSpec,
    FixedShares,
    FixedNotional,
    ProfitSharing,
    pnl_fixed_shares,
    pnl_fixed_notional,
    pnl_profit_sharing,
    reference_fixed_shares,
    reference_fixed_notional,
    reference_profit_sharing,
)
from .policy import NetworkPolicy, NaivePolicy, naive_policy
from .training import TrainConfig, rollout, objective_meanvar, train, evaluate, EvalReport

__all__ = [
    "Tape",
    "Var",
    "backward",
    "clipped_logistic",
    "ParamStore",
    "AdamState",
    "adam_step",
    "MarketParams",
    "PathBatch",
    "simulate_paths",
    "stylized_paths",
    "ContractSpec",
    "FixedShares",
    "FixedNotional",
    "ProfitSharing",
    "pnl_fixed_shares",
    "pnl_fixed_notional",
    "pnl_profit_sharing",
    "reference_fixed_shares",
    "reference_fixed_notional",
    "reference_profit_sharing",
    "NetworkPolicy",
    "NaivePolicy",
    "naive_policy",
    "TrainConfig",
    "rollout",
    "objective_meanvar",
    "train",
    "evaluate",
    "EvalReport",
]

__version__ = "0.1.0"
