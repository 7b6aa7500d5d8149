# -*- coding: utf-8 -*-
"""
Shared fixtures: benchmark parameters, market models and value surfaces
"""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from forward_performance.config import load_config  # noqa: E402
from forward_performance.expansion import ValueSurface  # noqa: E402
from forward_performance.models import PowerModelParams  # noqa: E402
from forward_performance.power import SeparableBenchmark, fast_market_model, power_market_model  # noqa: E402


@pytest.fixture(scope="session")
def power_params() -> PowerModelParams:
    """Slow CIR benchmark: gamma 2, Lambda 1, m0 1, beta 1, rho 0.05"""
    return PowerModelParams(gamma_ra=2.0, Lambda=[1.0], m0=1.0, beta=1.0, rho=[0.05], delta=0.01)


@pytest.fixture(scope="session")
def power_surface(power_params) -> ValueSurface:
    return ValueSurface(power_market_model(power_params))


@pytest.fixture(scope="session")
def fast_surface(power_params) -> ValueSurface:
    return ValueSurface(fast_market_model(power_params))


@pytest.fixture(scope="session")
def separable() -> SeparableBenchmark:
    slow = PowerModelParams(gamma_ra=2.0, Lambda=[1.0], m0=1.0, beta=1.0, rho=[0.5], delta=1.0)
    fast = PowerModelParams(gamma_ra=2.0, Lambda=[1.0], m0=1.0, beta=1.0, rho=[0.5], delta=1.0)
    return SeparableBenchmark(slow, fast)


@pytest.fixture(scope="session")
def separable_surface(separable) -> ValueSurface:
    return ValueSurface(separable.market_model())


@pytest.fixture
def small_grid() -> dict:
    return {"t": [0.0, 0.5], "x": [1.0, 2.0], "y1": [1.0], "y2": [1.0]}


@pytest.fixture
def cir_power_config(small_grid):
    return load_config(preset="cir-power", overrides={"grid": small_grid})
