"""Run-configuration parsing and validation."""

import math

import pytest

from buyback.config import ConfigError, RunConfig

REFERENCE = """
[market]
s0 = 45
sigma = 0.6
n_days = 63
volume = 4000000
eta = 0.1
cost_exponent = 0.75

[contract]
kind = fixed_shares
q = 20000000
exercise_window = [22, 62]
penalty_c = 2e-7

[training]
gamma = 2.5e-7
batch = 512
epochs = 1000
pretrain_epochs = 100
learning_rate = 1e-3
seed = 0

[output]
directory = out/reference
tag = reference
"""


def write(tmp_path, text, name="run.ini"):
    f = tmp_path / name
    f.write_text(text)
    return f


def test_reference_config_parses(tmp_path):
    cfg = RunConfig.load(write(tmp_path, REFERENCE))
    assert cfg.market.S0 == 45.0 and cfg.market.N == 63
    assert cfg.contract.kind == "fixed_shares"
    assert cfg.contract.terms.Q == 2e7
    assert cfg.contract.exercise_first == 22
    assert cfg.contract.exercise_last == 62
    assert cfg.training.gamma == 2.5e-7
    assert cfg.out_dir == "out/reference" and cfg.tag == "reference"


def test_missing_file():
    with pytest.raises(ConfigError):
        RunConfig.load("/nonexistent/run.ini")


def test_unknown_key_rejected(tmp_path):
    bad = REFERENCE.replace("eta = 0.1", "eta = 0.1\nspread = 2")
    with pytest.raises(ConfigError, match="spread"):
        RunConfig.load(write(tmp_path, bad))


def test_malformed_number_names_the_field(tmp_path):
    bad = REFERENCE.replace("sigma = 0.6", "sigma = sixty")
    with pytest.raises(ConfigError, match="sigma"):
        RunConfig.load(write(tmp_path, bad))


def test_domain_violation_rejected(tmp_path):
    bad = REFERENCE.replace("sigma = 0.6", "sigma = -1")
    with pytest.raises(ConfigError, match=r"\[market\]"):
        RunConfig.load(write(tmp_path, bad))


def test_bad_window_syntax(tmp_path):
    bad = REFERENCE.replace("[22, 62]", "22-62")
    with pytest.raises(ConfigError, match="exercise_window"):
        RunConfig.load(write(tmp_path, bad))


def test_window_must_end_before_expiry(tmp_path):
    bad = REFERENCE.replace("[22, 62]", "[22, 63]")
    with pytest.raises(ConfigError, match="n_days"):
        RunConfig.load(write(tmp_path, bad))


def test_missing_section(tmp_path):
    bad = REFERENCE.replace("[contract]", "[contracts]")
    with pytest.raises(ConfigError):
        RunConfig.load(write(tmp_path, bad))


def test_missing_required_key(tmp_path):
    bad = REFERENCE.replace("q = 20000000\n", "")
    with pytest.raises(ConfigError, match="'q'"):
        RunConfig.load(write(tmp_path, bad))


def test_unknown_contract_kind(tmp_path):
    bad = REFERENCE.replace("kind = fixed_shares", "kind = perpetual")
    with pytest.raises(ConfigError, match="kind"):
        RunConfig.load(write(tmp_path, bad))


def test_infinity_bounds_accepted(tmp_path):
    text = REFERENCE.replace(
        "penalty_c = 2e-7", "penalty_c = 2e-7\nrho_min = -inf\nrho_max = inf"
    )
    cfg = RunConfig.load(write(tmp_path, text))
    assert cfg.contract.rho_min == -math.inf
    assert cfg.contract.rho_max == math.inf


def test_profit_sharing_defaults(tmp_path):
    text = REFERENCE.replace(
        "kind = fixed_shares\nq = 20000000",
        "kind = profit_sharing\nf = 900000000",
    ).replace("penalty_c = 2e-7", "penalty_c = 2e-9")
    cfg = RunConfig.load(write(tmp_path, text))
    assert cfg.contract.kind == "profit_sharing"
    assert cfg.contract.rho_min == 0.0  # selling forbidden by default
    assert cfg.contract.terms.alpha == 0.25
    assert cfg.contract.terms.beta == 0.05
    assert cfg.contract.terms.kappa == 0.005


def test_output_section_optional(tmp_path):
    text = REFERENCE.split("[output]")[0]
    cfg = RunConfig.load(write(tmp_path, text))
    assert cfg.out_dir == "out" and cfg.tag == "run"


def test_training_defaults(tmp_path):
    text = REFERENCE.replace("gamma = 2.5e-7\n", "")
    cfg = RunConfig.load(write(tmp_path, text))
    assert cfg.training.gamma == 2.5e-7
    assert cfg.training.heldout_I == 2**14
    assert cfg.training.pretrain_penalty_C is None
