"""Shared fixtures: small market instances and reference contract specs."""

import numpy as np
import pytest

from buyback.contracts import (
    reference_fixed_notional,
    reference_fixed_shares,
    reference_profit_sharing,
)
from buyback.market import MarketParams


@pytest.fixture
def toy_mp():
    """O(1)-scale 3-day market, keeps finite differences well conditioned."""
    return MarketParams(S0=1.0, sigma=0.05, N=3, V=10.0, eta=0.1)


@pytest.fixture
def toy_spec():
    return reference_fixed_shares(Q=10.0, first=1, last=2, penalty_C=0.05)


@pytest.fixture
def ref_mp():
    return MarketParams(S0=45.0, sigma=0.6, N=63, V=4_000_000.0, eta=0.1)


@pytest.fixture
def ref_mp_flat():
    return MarketParams(S0=45.0, sigma=0.0, N=63, V=4_000_000.0, eta=0.1)


@pytest.fixture
def fs_spec():
    return reference_fixed_shares()


@pytest.fixture
def fn_spec():
    return reference_fixed_notional()


@pytest.fixture
def ps_spec():
    return reference_profit_sharing()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
