import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from oscine.qpfourier import FrequencyVector

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def freq1():
    return FrequencyVector(np.array([1.0]))


@pytest.fixture
def freq2():
    return FrequencyVector.golden()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
