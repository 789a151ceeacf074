import numpy as np
import pytest

from grf import InformationSystem
from helpers import blobs, continuous

_acceptance_results = []


@pytest.fixture
def tiny():
    """x = [1, 2, 3, 4], y = [0, 0, 1, 1]."""
    return InformationSystem(continuous(1), np.array([[1.0], [2.0], [3.0], [4.0]]), [0, 0, 1, 1], ("a", "b"))


@pytest.fixture(scope="session")
def blob_data():
    return blobs(0)


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _acceptance_results.append((value, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome in sorted(_acceptance_results, key=lambda t: int(t[0].split()[0][1:])):
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {label}")
