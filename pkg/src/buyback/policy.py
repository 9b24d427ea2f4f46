"""Contract-specific policy parameterisations.

Each policy maps the state (n, S, A, X, q) to a trading rate and a stopping
probability.  The trading nets are perturbations of a naive schedule (equal
shares per day, proportional notional target, or even cash spreading) so that
zero network weights reproduce the naive strategy exactly.  The stopping net
parameterises an exercise frontier in a contract-specific ratio (q/Q, qA/F or
X/F) squashed through a clipped logistic.

Network inputs are dimensionless and centered: time n/N - 1/2, relative price
S/S0 - 1, the spread (A - S)/S0, and a contract-specific inventory/cash ratio
minus 1/2.  Both ASR contracts omit the cash variable.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .contracts import FixedNotional, FixedShares, ProfitSharing

# raw trading-net output is clamped to this window before use so an untrained
# net cannot blow up the state early in training; inert at convergence
RAW_OUTPUT_MIN_FACTOR = -0.99  # times N
RAW_OUTPUT_MAX = 10.0


def mlp_forward(A1, b1, A2, b2, x):
    """One-hidden-layer net with ReLU activation and identity output.

    x may be a single input matrix (I, d_in); returns a batch of scalars (I,).
    """
    return ad.dotv(ad.relu(ad.affine(x, A1, b1)), A2, b2)


class NetworkPolicy:
    """Neural trading rate and stopping probability for one contract.

    ``weights`` maps parameter names ("theta.A1", ..., "nu") to arrays or tape
    Vars; passing tape leaves makes every output differentiable.
    """

    def __init__(self, weights, spec, mp):
        self.w = weights if isinstance(weights, dict) else weights.arrays
        self.spec = spec
        self.mp = mp

    def _trade_net(self, x):
        raw = mlp_forward(
            self.w["theta.A1"], self.w["theta.b1"],
            self.w["theta.A2"], self.w["theta.b2"], x,
        )
        lo = RAW_OUTPUT_MIN_FACTOR * self.mp.N
        return ad.minimum(ad.maximum(raw, lo), RAW_OUTPUT_MAX)

    def _stop_net(self, x):
        return mlp_forward(
            self.w["phi.A1"], self.w["phi.b1"],
            self.w["phi.A2"], self.w["phi.b2"], x,
        )

    def _base_features(self, n, S, A):
        mp = self.mp
        time = n / mp.N - 0.5
        rel_price = S / mp.S0 - 1.0
        spread = (A - S) / mp.S0
        return time, rel_price, spread

    def rate(self, n, S, A, X, q):
        """Trading rate v (shares/day) on day n, clamped to the participation
        bounds when they are finite."""
        mp, spec = self.mp, self.spec
        if not 0 <= n < mp.N:
            raise ValueError(f"trading day {n} outside 0..{mp.N - 1}")
        time, rel_price, spread = self._base_features(n, S, A)
        terms = spec.terms
        if isinstance(terms, FixedShares):
            Q = terms.Q
            x = ad.stack_columns([time, rel_price, spread, q / Q - 0.5])
            frac = ad.minimum(
                (1.0 + self._trade_net(x)) * ((n + 1) / mp.N), 1.0
            )
            v = Q * frac - q
        elif isinstance(terms, FixedNotional):
            F = terms.F
            x = ad.stack_columns([time, rel_price, spread, q * A / F - 0.5])
            v = (F / A) * ((n + 1) / mp.N) * (1.0 + self._trade_net(x)) - q
        else:
            F = terms.F
            x = ad.stack_columns(
                [time, rel_price, spread, X / F - 0.5, q * mp.S0 / F - 0.5]
            )
            frac = ad.maximum(
                ad.minimum((1.0 + self._trade_net(x)) / (mp.N - n), 1.0), 0.0
            )
            # indicator: no trading once the cash F has been spent
            trading_on = (ad.value_of(X) < F).astype(np.float64)
            v = trading_on * ((F - X) / S) * frac
        vol = self.mp.V[n]
        if np.isfinite(spec.rho_min):
            v = ad.maximum(v, spec.rho_min * vol)
        if np.isfinite(spec.rho_max):
            v = ad.minimum(v, spec.rho_max * vol)
        return v

    def stop_ratio(self, n, S, A, X, q):
        """The frontier variable: q/Q, qA/F or X/F depending on the contract."""
        terms = self.spec.terms
        if isinstance(terms, FixedShares):
            return q / terms.Q
        if isinstance(terms, FixedNotional):
            return q * A / terms.F
        return X / terms.F

    def stop(self, n, S, A, X, q):
        """Stopping probability on day n: 0 off the exercise window, 1 at
        expiry, otherwise the clipped-logistic frontier value."""
        mp, spec = self.mp, self.spec
        if n == mp.N:
            return 1.0
        if not spec.exercise_allowed(n, mp.N):
            return 0.0
        time, rel_price, spread = self._base_features(n, S, A)
        terms = spec.terms
        if isinstance(terms, ProfitSharing):
            x = ad.stack_columns(
                [time, rel_price, spread, q * mp.S0 / terms.F - 0.5]
            )
        else:
            x = ad.stack_columns([time, rel_price, spread])
        ratio = self.stop_ratio(n, S, A, X, q)
        return ad.clipped_logistic(self.w["nu"] * (ratio - self._stop_net(x)))


class NaivePolicy:
    """The tilde-v = 0 schedule with a hard (0/1) stopping rule.

    ``exercise="never"`` settles only at expiry; ``exercise="when_complete"``
    stops at the first allowed day once the inventory (fixed shares), share
    target (fixed notional) or cash (profit sharing) is complete.
    """

    def __init__(self, spec, mp, exercise="never"):
        if exercise not in ("never", "when_complete"):
            raise ValueError("exercise must be 'never' or 'when_complete'")
        self.spec = spec
        self.mp = mp
        self.exercise = exercise

    def rate(self, n, S, A, X, q):
        mp, terms = self.mp, self.spec.terms
        if not 0 <= n < mp.N:
            raise ValueError(f"trading day {n} outside 0..{mp.N - 1}")
        if isinstance(terms, FixedShares):
            v = terms.Q * min((n + 1) / mp.N, 1.0) - q
        elif isinstance(terms, FixedNotional):
            v = (terms.F / A) * ((n + 1) / mp.N) - q
        else:
            trading_on = (ad.value_of(X) < terms.F).astype(np.float64)
            v = trading_on * ((terms.F - X) / S) * (1.0 / (mp.N - n))
        vol = self.mp.V[n]
        if np.isfinite(self.spec.rho_min):
            v = ad.maximum(v, self.spec.rho_min * vol)
        if np.isfinite(self.spec.rho_max):
            v = ad.minimum(v, self.spec.rho_max * vol)
        return v

    def _complete(self, S, A, X, q):
        terms = self.spec.terms
        if isinstance(terms, FixedShares):
            return ad.value_of(q) >= terms.Q * (1.0 - 1e-12)
        if isinstance(terms, FixedNotional):
            return ad.value_of(q) * ad.value_of(A) >= terms.F * (1.0 - 1e-12)
        return ad.value_of(X) >= terms.F * (1.0 - 1e-12)

    def stop(self, n, S, A, X, q):
        mp = self.mp
        if n == mp.N:
            return 1.0
        if not self.spec.exercise_allowed(n, mp.N):
            return 0.0
        if self.exercise == "never":
            return 0.0
        return self._complete(S, A, X, q).astype(np.float64)


def naive_policy(spec, mp):
    """The never-early-exercise naive benchmark policy."""
    return NaivePolicy(spec, mp, exercise="never")


def trade_rate(n, S, A, X, q, params, spec, mp):
    """Functional form of :meth:`NetworkPolicy.rate`."""
    return NetworkPolicy(params, spec, mp).rate(n, S, A, X, q)


def stop_probability(n, S, A, X, q, params, spec, mp):
    """Functional form of :meth:`NetworkPolicy.stop`."""
    return NetworkPolicy(params, spec, mp).stop(n, S, A, X, q)
