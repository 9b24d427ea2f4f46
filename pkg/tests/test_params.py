"""Parameter store shapes, initialisation and checkpoint round trips."""

import numpy as np
import pytest

from buyback.autodiff import ShapeMismatchError
from buyback.params import INPUT_DIMS, ParamStore


@pytest.mark.parametrize("kind", sorted(INPUT_DIMS))
def test_initial_shapes(kind):
    params = ParamStore.initial(kind, seed=0)
    d_trade, d_stop = INPUT_DIMS[kind]
    assert params["theta.A1"].shape == (50, d_trade)
    assert params["phi.A1"].shape == (50, d_stop)
    assert params["theta.b2"].shape == ()
    assert params["nu"] == 10.0


def test_initial_is_seeded():
    a = ParamStore.initial("fixed_shares", seed=1)
    b = ParamStore.initial("fixed_shares", seed=1)
    c = ParamStore.initial("fixed_shares", seed=2)
    assert np.array_equal(a.to_flat(), b.to_flat())
    assert not np.array_equal(a.to_flat(), c.to_flat())


def test_initial_output_weights_are_small():
    params = ParamStore.initial("fixed_notional", seed=3)
    assert np.all(np.abs(params["theta.A2"]) <= 0.01)
    assert np.all(params["theta.b1"] == 0.0)
    assert params["theta.b2"] == 0.0


def test_zeros_reproduce_naive():
    params = ParamStore.zeros("fixed_shares")
    assert np.all(params["theta.A1"] == 0.0)
    assert np.all(params["phi.A2"] == 0.0)


def test_shape_validation():
    params = ParamStore.initial("fixed_shares")
    bad = {k: v.copy() for k, v in params.arrays.items()}
    bad["theta.A1"] = np.zeros((50, 5))
    with pytest.raises(ShapeMismatchError):
        ParamStore("fixed_shares", bad)
    incomplete = {k: v for k, v in params.arrays.items() if k != "nu"}
    with pytest.raises(ShapeMismatchError):
        ParamStore("fixed_shares", incomplete)


def test_nu_must_be_positive():
    params = ParamStore.initial("fixed_shares")
    arrays = {k: v.copy() for k, v in params.arrays.items()}
    arrays["nu"] = np.asarray(-1.0)
    with pytest.raises(ValueError):
        ParamStore("fixed_shares", arrays)


def test_unknown_contract_kind():
    with pytest.raises(ValueError):
        ParamStore.zeros("perpetual")


def test_flat_round_trip():
    params = ParamStore.initial("profit_sharing", seed=5)
    flat = params.to_flat()
    rebuilt = params.from_flat(flat)
    for name in params.names():
        assert np.array_equal(rebuilt[name], params[name])


def test_checkpoint_round_trip_is_bit_identical(tmp_path):
    params = ParamStore.initial("fixed_shares", seed=7)
    params.step = 123
    f = tmp_path / "model.ckpt"
    params.save(f)
    loaded = ParamStore.load(f)
    assert loaded.contract_kind == "fixed_shares"
    assert loaded.step == 123
    assert loaded.hidden == 50
    for name in params.names():
        assert np.array_equal(loaded[name], params[name]), name
    # a second save produces identical bytes
    g = tmp_path / "again.ckpt"
    loaded.save(g)
    assert f.read_bytes() == g.read_bytes()


def test_checkpoint_is_plain_text(tmp_path):
    params = ParamStore.initial("fixed_notional", seed=2)
    f = tmp_path / "model.ckpt"
    params.save(f)
    text = f.read_text()
    assert text.startswith("# buyback checkpoint v1")
    assert "contract = fixed_notional" in text
    assert "[theta.A1] shape=50,4" in text


def test_copy_is_independent():
    params = ParamStore.initial("fixed_shares", seed=0)
    clone = params.copy()
    clone.arrays["nu"] += 1.0
    assert params["nu"] == 10.0
