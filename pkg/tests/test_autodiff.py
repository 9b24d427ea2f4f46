"""Tape forward values, backward gradients, and the optimizer update rule."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from buyback import autodiff as ad
from buyback.autodiff import (
    LOG3,
    Tape,
    TapeContractError,
    Var,
    backward,
    clipped_logistic,
)
from buyback.params import AdamState, NonFiniteError, ParamStore, adam_step
from buyback.policy import mlp_forward


def test_zero_weights_give_zero_output():
    # all weights zero, any x -> 0
    x = np.array([[1.0, -2.0, 3.0], [0.5, 0.0, -7.0]])
    out = mlp_forward(np.zeros((5, 3)), np.zeros(5), np.zeros(5), 0.0, x)
    assert np.all(out == 0.0)


def test_identity_net_hand_value():
    # A1 = I, b1 = 0, A2 = ones, b2 = 0, x = (1, -2, 3) -> relu sums 1 + 0 + 3
    x = np.array([[1.0, -2.0, 3.0]])
    out = mlp_forward(np.eye(3), np.zeros(3), np.ones(3), 0.0, x)
    assert out[0] == pytest.approx(4.0)


def test_duplicate_evaluation_oracle(rng):
    # taped forward pass matches a straight numpy re-evaluation
    A1 = rng.normal(size=(8, 4))
    b1 = rng.normal(size=8)
    A2 = rng.normal(size=8)
    b2 = rng.normal()
    x = rng.normal(size=(6, 4))
    tape = Tape()
    taped = mlp_forward(tape.leaf(A1), tape.leaf(b1), tape.leaf(A2),
                        tape.leaf(b2), x)
    direct = np.maximum(x @ A1.T + b1, 0.0) @ A2 + b2
    assert np.allclose(ad.value_of(taped), direct, rtol=1e-12)


def test_clipped_logistic_values():
    assert ad.value_of(clipped_logistic(0.0)) == pytest.approx(0.5)
    assert ad.value_of(clipped_logistic(LOG3)) == 1.0
    assert ad.value_of(clipped_logistic(-LOG3)) == 0.0
    assert ad.value_of(clipped_logistic(5.0)) == 1.0
    assert ad.value_of(clipped_logistic(-5.0)) == 0.0


@given(st.floats(min_value=-50, max_value=50))
@settings(max_examples=200, deadline=None)
def test_clipped_logistic_bounded(x):
    y = float(ad.value_of(clipped_logistic(x)))
    assert 0.0 <= y <= 1.0


def test_clipped_logistic_monotone_interior():
    xs = np.linspace(-LOG3 + 1e-9, LOG3 - 1e-9, 200)
    ys = ad.value_of(clipped_logistic(xs))
    assert np.all(np.diff(ys) > 0)


def test_backward_square():
    # f(w) = w^2 at w = 3 -> df/dw = 6
    tape = Tape()
    w = tape.leaf(3.0)
    backward(tape, w * w)
    assert w.grad == pytest.approx(6.0)


def test_backward_saturated_logistic_is_flat():
    tape = Tape()
    x = tape.leaf(5.0)
    backward(tape, clipped_logistic(x))
    assert x.grad == 0.0


def test_backward_root_must_be_scalar():
    tape = Tape()
    x = tape.leaf(np.array([1.0, 2.0]))
    with pytest.raises(TapeContractError):
        backward(tape, x * x)


def test_mlp_gradients_match_finite_differences(rng):
    # every parameter of a 50-neuron net vs central differences, step 1e-5
    h, d = 50, 4
    arrays = {
        "A1": rng.normal(size=(h, d)) * 0.5,
        "b1": rng.normal(size=h) * 0.1,
        "A2": rng.normal(size=h) * 0.5,
        "b2": np.asarray(rng.normal() * 0.1),
    }
    x = rng.normal(size=(3, d))

    def value(arr):
        out = mlp_forward(arr["A1"], arr["b1"], arr["A2"], arr["b2"], x)
        return float(np.sum(out))

    tape = Tape()
    leaves = {k: tape.leaf(v) for k, v in arrays.items()}
    out = mlp_forward(leaves["A1"], leaves["b1"], leaves["A2"], leaves["b2"], x)
    backward(tape, ad.asum(out))

    step = 1e-5
    for name, arr in arrays.items():
        grad = np.atleast_1d(leaves[name].grad)
        flat = np.atleast_1d(arr).ravel()
        for j in range(flat.size):
            bumped = {k: v.copy() for k, v in arrays.items()}
            b = np.atleast_1d(bumped[name]).ravel()
            b[j] += step
            up = value({k: np.atleast_1d(v).reshape(np.shape(arrays[k]))
                        for k, v in bumped.items()})
            b[j] -= 2 * step
            down = value({k: np.atleast_1d(v).reshape(np.shape(arrays[k]))
                          for k, v in bumped.items()})
            fd = (up - down) / (2 * step)
            g = grad.ravel()[j]
            denom = max(abs(fd), abs(g), 1e-8)
            assert abs(fd - g) / denom < 1e-5, f"{name}[{j}]: {fd} vs {g}"


def test_kink_convention_clamp_has_zero_grad_at_tie():
    # maximum(x, bound) sends the tied gradient to the bound operand
    tape = Tape()
    x = tape.leaf(2.0)
    backward(tape, ad.maximum(x, 2.0))
    assert x.grad == 0.0
    tape = Tape()
    x = tape.leaf(2.0)
    backward(tape, ad.minimum(x, 2.0))
    assert x.grad == 0.0
    tape = Tape()
    x = tape.leaf(0.0)
    backward(tape, ad.relu(x))
    assert x.grad == 0.0


def test_constants_mix_with_vars():
    tape = Tape()
    x = tape.leaf(np.array([1.0, 2.0]))
    y = np.array([3.0, 4.0]) * x + 1.0  # ndarray on the left
    z = 2.0 / x
    assert isinstance(y, Var) and isinstance(z, Var)
    backward(tape, ad.asum(y + z))
    assert np.allclose(x.grad, np.array([3.0, 4.0]) - 2.0 / np.array([1.0, 4.0]))


def test_broadcast_gradients_unbroadcast():
    tape = Tape()
    s = tape.leaf(2.0)  # scalar broadcast against a vector
    v = tape.leaf(np.array([1.0, 2.0, 3.0]))
    backward(tape, ad.asum(s * v))
    assert s.grad == pytest.approx(6.0)
    assert np.allclose(v.grad, 2.0)


def test_adam_zero_gradient_leaves_params():
    params = ParamStore.zeros("fixed_shares")
    before = params.to_flat()
    state = AdamState(params)
    grads = {k: np.zeros_like(v) for k, v in params.arrays.items()}
    adam_step(params, grads, state, lr=0.1)
    assert np.array_equal(params.to_flat(), before)


def test_adam_first_step_is_lr_sign():
    params = ParamStore.zeros("fixed_shares")
    state = AdamState(params)
    grads = {k: np.full_like(v, 3.0) for k, v in params.arrays.items()}
    adam_step(params, grads, state, lr=1e-3)
    # bias-corrected first step: lr * g / (|g| + eps) ~ lr * sign(g)
    assert np.allclose(params["theta.A1"], 1e-3, rtol=1e-6)


def test_adam_constant_gradient_magnitude_tends_to_lr():
    params = ParamStore.zeros("fixed_shares")
    state = AdamState(params)
    grads = {k: np.full_like(v, -2.5) for k, v in params.arrays.items()}
    prev = params["theta.b1"].copy()
    for _ in range(200):
        prev = params["theta.b1"].copy()
        adam_step(params, grads, state, lr=1e-3)
    delta = params["theta.b1"] - prev
    # ascent step: direction sign(g), magnitude -> lr
    assert np.allclose(delta, -1e-3, rtol=1e-3)


def test_adam_rejects_nonfinite_gradient():
    params = ParamStore.zeros("fixed_shares")
    state = AdamState(params)
    grads = {k: np.zeros_like(v) for k, v in params.arrays.items()}
    grads["nu"] = np.asarray(math.nan)
    with pytest.raises(NonFiniteError):
        adam_step(params, grads, state, lr=1e-3)
