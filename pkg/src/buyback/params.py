"""Trainable parameters: the two policy networks and the stopping scale.

A :class:`ParamStore` holds named numpy arrays:

* ``theta.A1, theta.b1, theta.A2, theta.b2`` -- trading net (one hidden layer),
* ``phi.A1, phi.b1, phi.A2, phi.b2`` -- stopping net (one hidden layer),
* ``nu`` -- positive scalar scaling the stopping frontier.

Checkpoints are plain text: a metadata header followed by the arrays in
row-major order at 17 significant digits, so a write/read round trip is
bit-identical.
"""

from __future__ import annotations

import numpy as np

from .autodiff import ShapeMismatchError

HIDDEN_DEFAULT = 50

# input dimensions (trading net, stopping net) per contract kind
INPUT_DIMS = {
    "fixed_shares": (4, 3),
    "fixed_notional": (4, 3),
    "profit_sharing": (5, 4),
}

ARRAY_NAMES = (
    "theta.A1",
    "theta.b1",
    "theta.A2",
    "theta.b2",
    "phi.A1",
    "phi.b1",
    "phi.A2",
    "phi.b2",
    "nu",
)


class NonFiniteError(RuntimeError):
    """Raised when a gradient or objective stops being finite."""


class ParamStore:
    """All trainable scalars for one contract's pair of policy networks."""

    def __init__(self, contract_kind, arrays, hidden=HIDDEN_DEFAULT, step=0):
        if contract_kind not in INPUT_DIMS:
            raise ValueError(f"unknown contract kind {contract_kind!r}")
        self.contract_kind = contract_kind
        self.hidden = hidden
        self.step = step
        self.arrays = {k: np.asarray(v, dtype=np.float64) for k, v in arrays.items()}
        self._check_shapes()

    def _check_shapes(self):
        d_trade, d_stop = INPUT_DIMS[self.contract_kind]
        h = self.hidden
        expected = {
            "theta.A1": (h, d_trade),
            "theta.b1": (h,),
            "theta.A2": (h,),
            "theta.b2": (),
            "phi.A1": (h, d_stop),
            "phi.b1": (h,),
            "phi.A2": (h,),
            "phi.b2": (),
            "nu": (),
        }
        for name, shape in expected.items():
            if name not in self.arrays:
                raise ShapeMismatchError(f"missing parameter array {name}")
            got = self.arrays[name].shape
            if got != shape:
                raise ShapeMismatchError(f"{name}: expected shape {shape}, got {got}")
        if not self.arrays["nu"] > 0:
            raise ValueError("nu must be positive")

    @classmethod
    def initial(cls, contract_kind, seed=0, hidden=HIDDEN_DEFAULT, nu=10.0):
        """He-style uniform init for the hidden layers, small output weights.

        Both nets start close to the zero map, so the initial policy is close
        to the contract's naive schedule.
        """
        if contract_kind not in INPUT_DIMS:
            raise ValueError(f"unknown contract kind {contract_kind!r}")
        rng = np.random.default_rng(seed)
        d_trade, d_stop = INPUT_DIMS[contract_kind]

        def hidden_layer(d_in):
            lim = np.sqrt(6.0 / d_in)
            return rng.uniform(-lim, lim, size=(hidden, d_in))

        arrays = {
            "theta.A1": hidden_layer(d_trade),
            "theta.b1": np.zeros(hidden),
            "theta.A2": rng.uniform(-0.01, 0.01, size=hidden),
            "theta.b2": np.zeros(()),
            "phi.A1": hidden_layer(d_stop),
            "phi.b1": np.zeros(hidden),
            "phi.A2": rng.uniform(-0.01, 0.01, size=hidden),
            # start the exercise frontier at ratio 1 ("complete"): with a zero
            # bias the clipped logistic is saturated at 1 on the whole
            # exercise window and the stopping net receives no gradient
            "phi.b2": np.asarray(1.0),
            "nu": np.asarray(float(nu)),
        }
        return cls(contract_kind, arrays, hidden=hidden)

    @classmethod
    def zeros(cls, contract_kind, hidden=HIDDEN_DEFAULT, nu=10.0):
        """All-zero networks (the exact naive trading schedule)."""
        if contract_kind not in INPUT_DIMS:
            raise ValueError(f"unknown contract kind {contract_kind!r}")
        d_trade, d_stop = INPUT_DIMS[contract_kind]
        arrays = {
            "theta.A1": np.zeros((hidden, d_trade)),
            "theta.b1": np.zeros(hidden),
            "theta.A2": np.zeros(hidden),
            "theta.b2": np.zeros(()),
            "phi.A1": np.zeros((hidden, d_stop)),
            "phi.b1": np.zeros(hidden),
            "phi.A2": np.zeros(hidden),
            "phi.b2": np.zeros(()),
            "nu": np.asarray(float(nu)),
        }
        return cls(contract_kind, arrays, hidden=hidden)

    def copy(self):
        return ParamStore(
            self.contract_kind,
            {k: v.copy() for k, v in self.arrays.items()},
            hidden=self.hidden,
            step=self.step,
        )

    def __getitem__(self, name):
        return self.arrays[name]

    def names(self):
        return list(ARRAY_NAMES)

    def to_flat(self):
        return np.concatenate([self.arrays[n].ravel() for n in ARRAY_NAMES])

    def from_flat(self, flat):
        out = self.copy()
        i = 0
        for n in ARRAY_NAMES:
            size = self.arrays[n].size
            out.arrays[n] = np.asarray(flat[i : i + size]).reshape(
                self.arrays[n].shape
            )
            i += size
        return out

    # -- checkpoint io ------------------------------------------------------

    def save(self, path):
        d_trade, d_stop = INPUT_DIMS[self.contract_kind]
        lines = [
            "# buyback checkpoint v1",
            f"contract = {self.contract_kind}",
            f"hidden = {self.hidden}",
            f"d_in_trade = {d_trade}",
            f"d_in_stop = {d_stop}",
            f"step = {self.step}",
        ]
        for name in ARRAY_NAMES:
            arr = self.arrays[name]
            shape = ",".join(str(s) for s in arr.shape)
            lines.append(f"[{name}] shape={shape}")
            flat = arr.ravel()
            for row in np.array_split(flat, max(1, len(flat) // 8)) if flat.size else []:
                lines.append(" ".join(f"{x:.17g}" for x in row))
            if flat.size == 0:
                pass
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        meta = {}
        arrays = {}
        current = None
        values = []
        shape = None

        def flush():
            if current is not None:
                arr = np.array(values, dtype=np.float64).reshape(shape)
                arrays[current] = arr

        with open(path) as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if line.startswith("["):
                    flush()
                    head, shapespec = line.split("]")
                    current = head[1:]
                    dims = shapespec.split("=", 1)[1].strip()
                    shape = tuple(int(s) for s in dims.split(",") if s)
                    values = []
                elif current is None:
                    key, val = (s.strip() for s in line.split("=", 1))
                    meta[key] = val
                else:
                    values.extend(float(tok) for tok in line.split())
        flush()
        store = cls(
            meta["contract"],
            arrays,
            hidden=int(meta["hidden"]),
            step=int(meta["step"]),
        )
        return store


class AdamState:
    """Adaptive-moment accumulators for one ParamStore."""

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.arrays.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.arrays.items()}


def adam_step(params, grads, state, lr):
    """One adaptive-moment *ascent* step (we maximise the objective).

    Mutates ``params`` and ``state`` in place and returns ``params``.
    Raises :class:`NonFiniteError` on a non-finite gradient.
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    for name in params.names():
        g = np.asarray(grads.get(name, 0.0), dtype=np.float64)
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for {name} at step {state.t}")
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        mhat = state.m[name] / (1.0 - b1**state.t)
        vhat = state.v[name] / (1.0 - b2**state.t)
        params.arrays[name] = params.arrays[name] + lr * mhat / (
            np.sqrt(vhat) + state.eps
        )
    params.step += 1
    return params
