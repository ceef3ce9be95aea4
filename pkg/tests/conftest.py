"""Shared fixtures: a small two-user scenario that solves in well under a second."""

import copy

import pytest

from src.scenarios.config import ScenarioConfig, parse_config
from src.solver.optimizer import Scenario, SolverOptions

TINY_DOCUMENT = {
    "name": "tiny",
    "num_users": 2,
    "model": "ps",
    "power_unit": "J",
    "mean_harvest_tx": [1.0, 1.0],
    "noise_power": 1.0,
    "mean_harvest_rx": 0.05,
    "mean_consumption_rx": 0.1,
    "eta": 0.5,
    "rho": [0.05, 0.05],
    "fading_support": [[0.5, 2.0], [0.5, 2.0]],
    "fading_pmf": [[0.5, 0.5], [0.5, 0.5]],
    "solver": {"mu_grid": 3},
    "simulation": {"horizon": 20000, "seed": 3},
}


@pytest.fixture
def tiny_document() -> dict:
    """Raw scenario document; tests may mutate their copy."""
    return copy.deepcopy(TINY_DOCUMENT)


@pytest.fixture
def tiny_config(tiny_document) -> ScenarioConfig:
    """Validated tiny scenario."""
    return parse_config(tiny_document)


@pytest.fixture
def tiny_scenario(tiny_config) -> Scenario:
    """Tiny scenario in J/slot: deficit 0.05, gains {0.5, 2}."""
    return tiny_config.to_scenario()


@pytest.fixture
def solver_options() -> SolverOptions:
    """Default solver tuning."""
    return SolverOptions()
