"""Price simulation, running averages, and execution-cost accounting.

Each period is one day of length ``dt`` (1 by default), so a trading rate
``v`` (shares/day) and a daily share count coincide in the reference setup.
The running average is defined over days 1..n; we additionally set A_0 = S_0
so the spread input (A - S)/S0 is zero before trading starts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad

DYNAMICS = ("arithmetic-brownian", "geometric-brownian", "external-file")


@dataclass
class MarketParams:
    """Price, volume and execution-cost constants.

    ``cost_exponent`` is the exponent in L(rho) = eta * |rho|**(1 + cost_exponent)
    (per-share execution cost times participation rate).
    """

    S0: float = 45.0
    sigma: float = 0.6
    N: int = 63
    dt: float = 1.0
    V: np.ndarray | float = 4_000_000.0
    eta: float = 0.1
    cost_exponent: float = 0.75
    dynamics: str = "arithmetic-brownian"
    path_file: str | None = None

    def __post_init__(self):
        if np.isscalar(self.V):
            self.V = np.full(self.N, float(self.V))
        else:
            self.V = np.asarray(self.V, dtype=np.float64)
        if self.S0 <= 0:
            raise ValueError("S0 must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if len(self.V) != self.N:
            raise ValueError(f"volume schedule must have length N={self.N}")
        if np.any(self.V <= 0):
            raise ValueError("all volumes must be positive")
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.cost_exponent <= 0:
            raise ValueError("cost_exponent must be positive")
        if self.dynamics not in DYNAMICS:
            raise ValueError(f"dynamics must be one of {DYNAMICS}")

    def exec_cost_L(self, rho):
        """L(rho) = eta * |rho|**(1+cost_exponent), EUR per share per day."""
        return self.eta * ad.absolute(rho) ** (1.0 + self.cost_exponent)


def terminal_penalty_ell(x, C):
    """Quadratic terminal penalty C * x**2 (shares or EUR residual)."""
    if C < 0:
        raise ValueError("penalty coefficient must be nonnegative")
    return C * x * x


@dataclass
class PathBatch:
    """Simulated price trajectories with precomputed running averages.

    ``prices`` has shape (I, N+1) with column n holding S_n; ``averages`` has
    shape (I, N) with column n-1 holding A_n = mean(S_1..S_n).
    """

    prices: np.ndarray
    averages: np.ndarray = field(default=None)
    seed: int | None = None

    def __post_init__(self):
        self.prices = np.atleast_2d(np.asarray(self.prices, dtype=np.float64))
        if self.averages is None:
            self.averages = running_averages(self.prices)

    @property
    def count(self):
        return self.prices.shape[0]

    @property
    def n_days(self):
        return self.prices.shape[1] - 1


def running_averages(prices):
    """A_n = (1/n) sum_{k=1..n} S_k for n = 1..N, per path."""
    csum = np.cumsum(prices[:, 1:], axis=1)
    return csum / np.arange(1, prices.shape[1])


def _normal_increments(seed, count, n, base_key):
    """Per-trajectory Philox substreams keyed by (base_key, seed, index).

    Parallel and serial generation agree bit-for-bit because each trajectory
    owns its own counter-based stream.
    """
    out = np.empty((count, n))
    mixed = (base_key * 0x9E3779B97F4A7C15 + seed) % 2**64
    for i in range(count):
        gen = np.random.Generator(np.random.Philox(key=[mixed, i]))
        out[i] = gen.standard_normal(n)
    return out


def simulate_paths(mp, count, seed):
    """Simulate ``count`` price trajectories of mp.N days.

    Arithmetic Brownian: S_{n+1} = S_n + sigma*sqrt(dt)*eps.  Geometric
    Brownian: log-increments N(-sigma^2 dt/2, sigma^2 dt).  Negative prices
    are allowed under the arithmetic dynamics.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if mp.dynamics == "external-file":
        if mp.path_file is None:
            raise ValueError("external-file dynamics requires path_file")
        batch = load_path_file(mp.path_file)
        if batch.count < count:
            raise ValueError(
                f"path file holds {batch.count} paths, {count} requested"
            )
        return PathBatch(batch.prices[:count], seed=seed)
    eps = _normal_increments(seed, count, mp.N, base_key=0x5ABB)
    if mp.dynamics == "arithmetic-brownian":
        incr = mp.sigma * np.sqrt(mp.dt) * eps
        prices = mp.S0 + np.concatenate(
            [np.zeros((count, 1)), np.cumsum(incr, axis=1)], axis=1
        )
    else:  # geometric-brownian
        logincr = -0.5 * mp.sigma**2 * mp.dt + mp.sigma * np.sqrt(mp.dt) * eps
        logpath = np.concatenate(
            [np.zeros((count, 1)), np.cumsum(logincr, axis=1)], axis=1
        )
        prices = mp.S0 * np.exp(logpath)
    return PathBatch(prices, seed=seed)


STYLIZED_KINDS = ("up", "down", "v-shape")
_STYLIZED_SEED = 20_210_614


def stylized_paths(mp, kind):
    """Deterministic single path with a stylised trend plus seeded noise.

    ``up``: +10% drift over the horizon; ``down``: -10%; ``v-shape``: -8% to
    the midpoint then +12% of S0 back up.  The noise is scaled by mp.sigma
    (zero sigma gives the pure piecewise-linear shape) and uses a fixed seed.
    """
    if kind not in STYLIZED_KINDS:
        raise ValueError(f"kind must be one of {STYLIZED_KINDS}")
    N = mp.N
    t = np.arange(N + 1) / N
    if kind == "up":
        base = mp.S0 * (1.0 + 0.10 * t)
    elif kind == "down":
        base = mp.S0 * (1.0 - 0.10 * t)
    else:
        mid = N // 2
        base = np.empty(N + 1)
        base[: mid + 1] = mp.S0 * (1.0 - 0.08 * np.arange(mid + 1) / mid)
        base[mid:] = mp.S0 * (0.92 + 0.12 * np.arange(N - mid + 1) / (N - mid))
    gen = np.random.Generator(
        np.random.Philox(key=[_STYLIZED_SEED, STYLIZED_KINDS.index(kind)])
    )
    noise = np.concatenate(
        [[0.0], np.cumsum(gen.standard_normal(N))]
    ) * mp.sigma * np.sqrt(mp.dt) * 0.3
    # pin the endpoints so the trend survives the noise
    noise -= t * noise[-1]
    return PathBatch((base + noise)[None, :], seed=_STYLIZED_SEED)


def step_state(state, v, S_next, mp):
    """Advance (n, S, A, X, q) by one day of trading at rate v.

    q' = q + v dt; X' = X + v S' dt + L(v/V_{n+1}) V_{n+1} dt; the running
    average follows A' = A + (S' - A)/(n+1).  Differentiable in v when the
    inputs are recorded on a tape.
    """
    n, S, A, X, q = state
    if n >= mp.N:
        raise ValueError(f"cannot step past the horizon (n={n}, N={mp.N})")
    vol = mp.V[n]
    dt = mp.dt
    q_next = q + v * dt
    X_next = X + v * S_next * dt + mp.exec_cost_L(v / vol) * vol * dt
    A_next = A + (S_next - A) / (n + 1)
    return (n + 1, S_next, A_next, X_next, q_next)


# -- external path files ----------------------------------------------------

PATH_FILE_HEADER = ["path_id", "day", "price"]


def load_path_file(path):
    """Read a CSV of trajectories (`path_id,day,price`, days 0..N per path)."""
    rows = {}
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if [h.strip() for h in header] != PATH_FILE_HEADER:
            raise ValueError(f"expected header {PATH_FILE_HEADER}, got {header}")
        for pid, day, price in reader:
            rows.setdefault(int(pid), {})[int(day)] = float(price)
    if not rows:
        raise ValueError("path file holds no data rows")
    lengths = {max(days) for days in rows.values()}
    if len(lengths) != 1:
        raise ValueError("ragged path file: paths have different horizons")
    n = lengths.pop()
    prices = np.empty((len(rows), n + 1))
    for i, pid in enumerate(sorted(rows)):
        days = rows[pid]
        if sorted(days) != list(range(n + 1)):
            raise ValueError(f"path {pid} is missing days")
        prices[i] = [days[d] for d in range(n + 1)]
    return PathBatch(prices)


def save_path_file(path, batch):
    """Write a PathBatch in the `path_id,day,price` schema."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(PATH_FILE_HEADER)
        for i in range(batch.count):
            for d in range(batch.n_days + 1):
                writer.writerow([i, d, f"{batch.prices[i, d]:.17g}"])
