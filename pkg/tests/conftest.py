import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gaussflow.measure import build_gaussian, build_perturbed_cosine

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def gauss():
    return build_gaussian(10.0, 1024)


@pytest.fixture(scope="session")
def gauss512():
    return build_gaussian(10.0, 512)


@pytest.fixture(scope="session")
def cosine():
    return build_perturbed_cosine(10.0, 1024)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE_LINES
    except ImportError:
        return
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
