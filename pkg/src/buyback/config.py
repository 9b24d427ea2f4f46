"""Run configuration: a flat, sectioned key-value file (INI grammar).

Example::

    [market]
    s0 = 45
    sigma = 0.6
    n_days = 63
    volume = 4000000
    eta = 0.1
    cost_exponent = 0.75
    dynamics = arithmetic-brownian

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

Unknown keys are rejected; every numeric field is validated before any compute
starts.  ``exercise_window`` is the inclusive range of allowed early-exercise
days.  ``rho_min``/``rho_max`` accept ``-inf``/``inf``.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass

from .contracts import ContractSpec, FixedNotional, FixedShares, ProfitSharing
from .market import MarketParams
from .training import TrainConfig


class ConfigError(ValueError):
    """A configuration file failed validation; message names the field."""


_MARKET_KEYS = {
    "s0", "sigma", "n_days", "dt", "volume", "eta", "cost_exponent",
    "dynamics", "path_file",
}
_CONTRACT_KEYS = {
    "kind", "q", "f", "zeta", "alpha", "kappa", "beta",
    "exercise_window", "rho_min", "rho_max", "penalty_c",
}
_TRAINING_KEYS = {
    "gamma", "batch", "epochs", "pretrain_epochs", "learning_rate", "seed",
    "pretrain_penalty_c", "heldout", "eval_every",
}
_OUTPUT_KEYS = {"directory", "tag"}


@dataclass
class RunConfig:
    market: MarketParams
    contract: ContractSpec
    training: TrainConfig
    out_dir: str
    tag: str
    raw: dict

    @classmethod
    def load(cls, path):
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        return cls.from_parser(parser, path)

    @classmethod
    def from_parser(cls, parser, path="<config>"):
        def section(name, allowed, required=True):
            if name not in parser:
                if required:
                    raise ConfigError(f"{path}: missing [{name}] section")
                return {}
            data = dict(parser[name])
            unknown = set(data) - allowed
            if unknown:
                raise ConfigError(
                    f"{path}: unknown key(s) in [{name}]: {sorted(unknown)}"
                )
            return data

        def num(data, sec, key, default=None, integer=False):
            if key not in data:
                if default is None:
                    raise ConfigError(f"{path}: [{sec}] missing required key '{key}'")
                return default
            text = data[key].strip()
            try:
                if text.lower() in ("inf", "+inf"):
                    return math.inf
                if text.lower() == "-inf":
                    return -math.inf
                return int(text) if integer else float(text)
            except ValueError as exc:
                raise ConfigError(f"{path}: [{sec}] {key}={text!r}: {exc}") from exc

        m = section("market", _MARKET_KEYS)
        c = section("contract", _CONTRACT_KEYS)
        t = section("training", _TRAINING_KEYS)
        o = section("output", _OUTPUT_KEYS, required=False)

        try:
            market = MarketParams(
                S0=num(m, "market", "s0", 45.0),
                sigma=num(m, "market", "sigma", 0.6),
                N=num(m, "market", "n_days", 63, integer=True),
                dt=num(m, "market", "dt", 1.0),
                V=num(m, "market", "volume", 4_000_000.0),
                eta=num(m, "market", "eta", 0.1),
                cost_exponent=num(m, "market", "cost_exponent", 0.75),
                dynamics=m.get("dynamics", "arithmetic-brownian").strip(),
                path_file=m.get("path_file"),
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: [market] {exc}") from exc

        kind = c.get("kind", "").strip()
        window = c.get("exercise_window", "").strip()
        match = re.fullmatch(r"\[\s*(\d+)\s*,\s*(\d+)\s*\]", window)
        if not match:
            raise ConfigError(
                f"{path}: [contract] exercise_window must look like [22, 62]"
            )
        first, last = int(match.group(1)), int(match.group(2))
        try:
            if kind == "fixed_shares":
                terms = FixedShares(num(c, "contract", "q"))
            elif kind == "fixed_notional":
                terms = FixedNotional(
                    num(c, "contract", "f"), num(c, "contract", "zeta", 0.8)
                )
            elif kind == "profit_sharing":
                terms = ProfitSharing(
                    num(c, "contract", "f"),
                    num(c, "contract", "alpha", 0.25),
                    num(c, "contract", "kappa", 0.005),
                    num(c, "contract", "beta", 0.05),
                )
            else:
                raise ConfigError(
                    f"{path}: [contract] kind must be fixed_shares, "
                    f"fixed_notional or profit_sharing (got {kind!r})"
                )
            contract = ContractSpec(
                terms,
                first,
                last,
                rho_min=num(c, "contract", "rho_min",
                            0.0 if kind == "profit_sharing" else -math.inf),
                rho_max=num(c, "contract", "rho_max", math.inf),
                penalty_C=num(c, "contract", "penalty_c", 2e-7),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{path}: [contract] {exc}") from exc
        if last >= market.N:
            raise ConfigError(
                f"{path}: [contract] exercise_window end {last} must be < n_days"
            )

        try:
            pre_c = t.get("pretrain_penalty_c")
            training = TrainConfig(
                gamma=num(t, "training", "gamma", 2.5e-7),
                batch_I=num(t, "training", "batch", 512, integer=True),
                epochs=num(t, "training", "epochs", 1000, integer=True),
                pretrain_epochs=num(t, "training", "pretrain_epochs", 100,
                                    integer=True),
                learning_rate=num(t, "training", "learning_rate", 1e-3),
                seed=num(t, "training", "seed", 0, integer=True),
                pretrain_penalty_C=float(pre_c) if pre_c is not None else None,
                heldout_I=num(t, "training", "heldout", 2**14, integer=True),
                eval_every=num(t, "training", "eval_every", 50, integer=True),
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: [training] {exc}") from exc

        raw = {s: dict(parser[s]) for s in parser.sections()}
        return cls(
            market=market,
            contract=contract,
            training=training,
            out_dir=o.get("directory", "out"),
            tag=o.get("tag", "run"),
            raw=raw,
        )
