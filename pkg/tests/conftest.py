"""Shared scenario runs; reports are deterministic so session scope is safe."""

import pytest

from nhpassage import ScenarioConfig, run_cyclic, run_two_level


@pytest.fixture(scope="session")
def two_level_reports():
    ids = ("two_level_a", "two_level_b", "two_level_c", "two_level_d")
    return {sid: run_two_level(ScenarioConfig(scenario=sid)) for sid in ids}


@pytest.fixture(scope="session")
def cyclic_cw_report():
    return run_cyclic(ScenarioConfig(scenario="cyclic_cw", loops=2))


@pytest.fixture(scope="session")
def cyclic_ccw_report():
    return run_cyclic(ScenarioConfig(scenario="cyclic_ccw", loops=2))
