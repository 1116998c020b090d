import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", deadline=None, max_examples=400)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def det_scenario():
    from hetcal.protocol import Scenario

    return Scenario(deterministic=True, n_repeats=2)


@pytest.fixture(scope="session")
def det_datasets(det_scenario):
    from hetcal.protocol import run_protocol

    return run_protocol(det_scenario)


@pytest.fixture(scope="session")
def noisy_datasets():
    from hetcal.protocol import Scenario, run_protocol

    return run_protocol(Scenario(seed=7, n_repeats=5))


def pytest_terminal_summary(terminalreporter):
    module = __import__("sys").modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
