"""Minimal reverse-mode automatic differentiation over scalars and dense arrays.

Everything is batched with plain numpy: a ``Var`` wraps an ndarray (trajectories
along the leading axis) and records the operation that produced it on a
``Tape``.  The primitives cover exactly what a one-hidden-layer policy network,
an N-step rollout and a mean-variance objective need; nothing more.

All functions here accept either ``Var`` operands or plain numbers/ndarrays.
Plain inputs are treated as constants: the forward value is identical and no
gradient is accumulated for them, so policy and contract code can be written
once and run both on a tape (training) and tape-free (evaluation, oracles).
"""

from __future__ import annotations

import math

import numpy as np

LOG3 = math.log(3.0)


class ShapeMismatchError(ValueError):
    """Raised when operand dimensions do not line up."""


class TapeContractError(ValueError):
    """Raised when a tape operation is used outside its contract."""


class Tape:
    """Append-only record of primitive operations.

    Nodes are stored in creation order, which is automatically a topological
    order: every node's operands were created before it.
    """

    def __init__(self):
        self.nodes = []

    def leaf(self, value):
        """Wrap an array as a differentiable leaf on this tape."""
        return Var(value, self)

    def __len__(self):
        return len(self.nodes)


class Var:
    """A value recorded on a tape, together with its backward rule."""

    __slots__ = ("value", "tape", "parents", "vjps", "grad")

    # make ndarray <op> Var defer to our reflected operators instead of
    # numpy building an object array
    __array_ufunc__ = None

    def __init__(self, value, tape, parents=(), vjps=()):
        self.value = np.asarray(value, dtype=np.float64)
        self.tape = tape
        self.parents = parents
        self.vjps = vjps
        self.grad = None
        if tape is not None:
            tape.nodes.append(self)

    @property
    def shape(self):
        return self.value.shape

    def item(self):
        return float(self.value)

    # arithmetic sugar; constants on either side are fine
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __pow__(self, p):
        return powc(self, p)

    def __repr__(self):
        return f"Var({self.value!r})"


def value_of(x):
    """Underlying ndarray of a Var, or the input itself coerced to float array."""
    if isinstance(x, Var):
        return x.value
    return np.asarray(x, dtype=np.float64)


def _tape_of(*xs):
    for x in xs:
        if isinstance(x, Var) and x.tape is not None:
            return x.tape
    return None


def _unbroadcast(g, shape):
    """Sum a gradient back down to the shape of the operand it belongs to."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _binary(a, b, forward, vjp_a, vjp_b):
    tape = _tape_of(a, b)
    av, bv = value_of(a), value_of(b)
    out = forward(av, bv)
    if tape is None:
        return out
    parents, vjps = [], []
    if isinstance(a, Var):
        parents.append(a)
        vjps.append(lambda g: _unbroadcast(vjp_a(g, av, bv), av.shape))
    if isinstance(b, Var):
        parents.append(b)
        vjps.append(lambda g: _unbroadcast(vjp_b(g, av, bv), bv.shape))
    return Var(out, tape, tuple(parents), tuple(vjps))


def _unary(a, forward, vjp):
    av = value_of(a)
    out = forward(av)
    if not isinstance(a, Var) or a.tape is None:
        return out
    return Var(out, a.tape, (a,), (lambda g: _unbroadcast(vjp(g, av), av.shape),))


def add(a, b):
    return _binary(a, b, np.add, lambda g, x, y: g, lambda g, x, y: g)


def sub(a, b):
    return _binary(a, b, np.subtract, lambda g, x, y: g, lambda g, x, y: -g)


def mul(a, b):
    return _binary(a, b, np.multiply, lambda g, x, y: g * y, lambda g, x, y: g * x)


def div(a, b):
    return _binary(
        a, b, np.divide, lambda g, x, y: g / y, lambda g, x, y: -g * x / (y * y)
    )


def powc(a, p):
    """a**p for a constant real exponent p."""
    p = float(p)
    return _unary(a, lambda x: x**p, lambda g, x: g * p * x ** (p - 1.0))


def exp(a):
    return _unary(a, np.exp, lambda g, x: g * np.exp(x))


def log(a):
    return _unary(a, np.log, lambda g, x: g / x)


def absolute(a):
    # subgradient 0 at the kink
    return _unary(a, np.abs, lambda g, x: g * np.sign(x))


def relu(a):
    # derivative 0 exactly at the kink
    return _unary(a, lambda x: np.maximum(x, 0.0), lambda g, x: g * (x > 0.0))


def maximum(a, b):
    """Elementwise max.  At a tie the gradient goes to the second operand, so
    a clamp written ``maximum(x, bound)`` gives x a zero derivative exactly at
    the kink."""
    return _binary(
        a,
        b,
        np.maximum,
        lambda g, x, y: g * (x > y),
        lambda g, x, y: g * (x <= y),
    )


def minimum(a, b):
    """Elementwise min, with the same tie convention as :func:`maximum`."""
    return _binary(
        a,
        b,
        np.minimum,
        lambda g, x, y: g * (x < y),
        lambda g, x, y: g * (x >= y),
    )


def _clipped_logistic_value(x):
    x = np.asarray(x, dtype=np.float64)
    s = 1.0 / (1.0 + np.exp(-x))
    raw = 2.0 * s - 0.5
    out = np.clip(raw, 0.0, 1.0)
    # exact saturation at the analytic bounds +-ln 3
    out = np.where(x >= LOG3, 1.0, out)
    out = np.where(x <= -LOG3, 0.0, out)
    return out


def clipped_logistic(a):
    """Rescaled logistic bounded to [0, 1]: min(max(2/(1+e^-x) - 1/2, 0), 1).

    Saturates exactly: 0 for x <= -ln 3 and 1 for x >= ln 3, with zero
    derivative in the saturated regions (and exactly at the bounds).
    """

    def vjp(g, x):
        s = 1.0 / (1.0 + np.exp(-x))
        interior = (x > -LOG3) & (x < LOG3)
        return g * np.where(interior, 2.0 * s * (1.0 - s), 0.0)

    return _unary(a, _clipped_logistic_value, vjp)


def affine(x, w, b):
    """Batched hidden layer: x @ w.T + b with x (I, d), w (h, d), b (h,)."""
    xv, wv, bv = value_of(x), value_of(w), value_of(b)
    if xv.shape[-1] != wv.shape[-1]:
        raise ShapeMismatchError(
            f"affine: input dim {xv.shape[-1]} does not match weight dim {wv.shape[-1]}"
        )
    tape = _tape_of(x, w, b)
    out = xv @ wv.T + bv
    if tape is None:
        return out
    parents, vjps = [], []
    if isinstance(x, Var):
        parents.append(x)
        vjps.append(lambda g: g @ wv)
    if isinstance(w, Var):
        parents.append(w)
        vjps.append(lambda g: g.T @ xv)
    if isinstance(b, Var):
        parents.append(b)
        vjps.append(lambda g: g.sum(axis=0))
    return Var(out, tape, tuple(parents), tuple(vjps))


def dotv(x, w, b):
    """Batched output layer: x @ w + b with x (I, h), w (h,), b scalar -> (I,)."""
    xv, wv = value_of(x), value_of(w)
    if xv.shape[-1] != wv.shape[-1]:
        raise ShapeMismatchError(
            f"dotv: input dim {xv.shape[-1]} does not match weight dim {wv.shape[-1]}"
        )
    bv = value_of(b)
    tape = _tape_of(x, w, b)
    out = xv @ wv + bv
    if tape is None:
        return out
    parents, vjps = [], []
    if isinstance(x, Var):
        parents.append(x)
        vjps.append(lambda g: g[:, None] * wv[None, :])
    if isinstance(w, Var):
        parents.append(w)
        vjps.append(lambda g: g @ xv)
    if isinstance(b, Var):
        parents.append(b)
        vjps.append(lambda g: _unbroadcast(np.asarray(g), bv.shape))
    return Var(out, tape, tuple(parents), tuple(vjps))


def stack_columns(cols):
    """Stack a list of (I,) values into an (I, k) matrix (network input)."""
    tape = _tape_of(*cols)
    vals = [np.asarray(value_of(c), dtype=np.float64) for c in cols]
    width = max((v.shape[0] for v in vals if v.ndim), default=1)
    vals = [np.broadcast_to(v, (width,)) for v in vals]
    out = np.stack(vals, axis=1)
    if tape is None:
        return out
    parents, vjps = [], []
    for j, c in enumerate(cols):
        if isinstance(c, Var):
            parents.append(c)
            vjps.append(lambda g, j=j, c=c: _unbroadcast(g[:, j], c.value.shape))
    return Var(out, tape, tuple(parents), tuple(vjps))


def asum(a):
    return _unary(a, np.sum, lambda g, x: np.broadcast_to(g, x.shape))


def amean(a):
    return _unary(a, np.mean, lambda g, x: np.broadcast_to(g / x.size, x.shape))


def backward(tape, root):
    """Reverse sweep: accumulate d(root)/d(node) into ``node.grad``.

    ``root`` must be a scalar node on the tape.  Gradients of all leaves
    created with ``tape.leaf`` are left in their ``.grad`` attribute
    (``None`` for nodes the root does not depend on).
    """
    if not isinstance(root, Var) or root.value.size != 1:
        raise TapeContractError("backward root must be a scalar Var")
    for node in tape.nodes:
        node.grad = None
    root.grad = np.ones_like(root.value)
    for node in reversed(tape.nodes):
        g = node.grad
        if g is None:
            continue
        for parent, vjp in zip(node.parents, node.vjps):
            pg = vjp(g)
            if parent.grad is None:
                parent.grad = np.array(pg, dtype=np.float64, copy=True)
            else:
                parent.grad += pg
    return root.grad
