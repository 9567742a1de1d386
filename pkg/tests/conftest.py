import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from motionforce.model import bundled_scenario_path, default_robot, load_scenario

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def robot():
    return default_robot()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def sim1():
    return load_scenario(bundled_scenario_path("sim1"))


@pytest.fixture(scope="session")
def sim2():
    return load_scenario(bundled_scenario_path("sim2"))


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    def report(label: str, passed: bool, detail: str) -> bool:
        ACCEPTANCE_LINES.append(f"{label}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
