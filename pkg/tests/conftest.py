import numpy as np
import pytest
from hypothesis import settings

from qinvariant.levy_model import BrownianDrift, Pochhammer

settings.register_profile("repo", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def bessel_driver():
    return BrownianDrift(-0.25, 1.0)


@pytest.fixture(scope="session")
def poch15():
    return Pochhammer(1.5, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance bookkeeping ----------------------------------------------------------

ACCEPTANCE_FILE = "test_acceptance.py"
SESSION = {"start": None, "property_failures": [], "property_count": 0, "lines": []}


def pytest_sessionstart(session):
    import time

    SESSION["start"] = time.perf_counter()


def pytest_collection_modifyitems(session, config, items):
    # the acceptance file reads the outcome of every other test, so it runs last
    items.sort(key=lambda it: it.fspath.basename == ACCEPTANCE_FILE)


def pytest_runtest_logreport(report):
    if report.fspath.endswith(ACCEPTANCE_FILE):
        return
    if report.when == "call":
        SESSION["property_count"] += 1
    if report.failed:
        SESSION["property_failures"].append(report.nodeid)


def pytest_terminal_summary(terminalreporter):
    if SESSION["lines"]:
        terminalreporter.section("acceptance criteria")
        for line in SESSION["lines"]:
            terminalreporter.write_line(line)
