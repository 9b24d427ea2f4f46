"""The three buyback contract termsheets and their settlement PnL.

PnL formulas (settlement on day n, state (S, A, X, q)):

* fixed shares:    Q A - X - (Q - q) S - ell(Q - q)
* fixed notional:  F - X - (F/A - q) S - ell(F/A - q)
* profit sharing:  -ell(F - X) + alpha (q (A - kappa S0) - F)_+
                                - beta (q (A - kappa S0) - F)_-

with ell(x) = penalty_C * x**2.  The terminal block trade is charged through
ell only; the participation bounds apply to the daily trading rate, not to the
block.  The profit-sharing "unspent cash" penalty is exactly the -ell(F - X)
term, applied at any settlement day.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import autodiff as ad
from .market import terminal_penalty_ell


class DomainError(ValueError):
    """State outside a PnL formula's domain (e.g. nonpositive average)."""


@dataclass(frozen=True)
class FixedShares:
    """ASR over a fixed number of shares Q."""

    Q: float
    kind = "fixed_shares"


@dataclass(frozen=True)
class FixedNotional:
    """ASR over a fixed cash notional F; zeta sizes the initial delivery."""

    F: float
    zeta: float = 0.8
    kind = "fixed_notional"


@dataclass(frozen=True)
class ProfitSharing:
    """VWAP-minus profit-sharing over notional F with asymmetric sharing."""

    F: float
    alpha: float = 0.25
    kappa: float = 0.005
    beta: float = 0.05
    kind = "profit_sharing"


@dataclass(frozen=True)
class ContractSpec:
    """A termsheet plus its exercise window and trading constraints."""

    terms: FixedShares | FixedNotional | ProfitSharing
    exercise_first: int
    exercise_last: int
    rho_min: float = -math.inf
    rho_max: float = math.inf
    penalty_C: float = 2e-7

    def __post_init__(self):
        if self.exercise_first < 1 or self.exercise_last < self.exercise_first:
            raise ValueError("exercise window must satisfy 1 <= first <= last")
        if self.rho_min > self.rho_max:
            raise ValueError("rho_min must not exceed rho_max")
        if self.penalty_C < 0:
            raise ValueError("penalty_C must be nonnegative")
        t = self.terms
        if isinstance(t, ProfitSharing):
            if not (0.0 < t.alpha <= 1.0 and 0.0 <= t.beta < t.alpha):
                raise ValueError("profit sharing requires 0 <= beta < alpha <= 1")
            if self.rho_min < 0:
                raise ValueError("profit sharing forbids selling: rho_min >= 0")

    @property
    def kind(self):
        return self.terms.kind

    @property
    def exercise_set(self):
        return frozenset(range(self.exercise_first, self.exercise_last + 1))

    def exercise_allowed(self, n, N):
        """True iff day n is an allowed settlement day (expiry always is)."""
        if not 0 <= n <= N:
            raise ValueError(f"day {n} outside the horizon 0..{N}")
        return n == N or self.exercise_first <= n <= self.exercise_last

    def normalizer(self, mp):
        """Scale for reporting MeanVar: Q*S0 for fixed shares, F otherwise."""
        if isinstance(self.terms, FixedShares):
            return self.terms.Q * mp.S0
        return self.terms.F

    def pnl(self, S, A, X, q, mp):
        """Settlement PnL for the contract's termsheet (dispatch)."""
        if isinstance(self.terms, FixedShares):
            return pnl_fixed_shares(S, A, X, q, self, mp)
        if isinstance(self.terms, FixedNotional):
            return pnl_fixed_notional(S, A, X, q, self, mp)
        return pnl_profit_sharing(S, A, X, q, self, mp)


def pnl_fixed_shares(S, A, X, q, spec, mp):
    """Q A - X - (Q - q) S - ell(Q - q)."""
    Q = spec.terms.Q
    rem = Q - q
    return Q * A - X - rem * S - terminal_penalty_ell(rem, spec.penalty_C)


def pnl_fixed_notional(S, A, X, q, spec, mp):
    """F - X - (F/A - q) S - ell(F/A - q); requires a positive average."""
    import numpy as np

    if np.any(ad.value_of(A) <= 0):
        raise DomainError("fixed-notional PnL undefined for average price <= 0")
    F = spec.terms.F
    rem = F / A - q
    return F - X - rem * S - terminal_penalty_ell(rem, spec.penalty_C)


def pnl_profit_sharing(S, A, X, q, spec, mp):
    """-ell(F - X) + alpha (.)_+ - beta (.)_- on q (A - kappa S0) - F."""
    t = spec.terms
    gain = q * (A - t.kappa * mp.S0) - t.F
    pos = ad.maximum(gain, 0.0)
    neg = ad.maximum(-gain, 0.0)
    return (
        -terminal_penalty_ell(t.F - X, spec.penalty_C)
        + t.alpha * pos
        - t.beta * neg
    )


def reference_fixed_shares(Q=20_000_000.0, first=22, last=62, penalty_C=2e-7):
    return ContractSpec(FixedShares(Q), first, last, penalty_C=penalty_C)


def reference_fixed_notional(F=900_000_000.0, first=22, last=62, penalty_C=2e-7):
    return ContractSpec(FixedNotional(F), first, last, penalty_C=penalty_C)


def reference_profit_sharing(
    F=900_000_000.0, alpha=0.25, kappa=0.005, beta=0.05, first=22, last=62,
    penalty_C=2e-9,
):
    return ContractSpec(
        ProfitSharing(F, alpha, kappa, beta),
        first,
        last,
        rho_min=0.0,
        penalty_C=penalty_C,
    )
