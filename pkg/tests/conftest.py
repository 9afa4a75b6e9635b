import numpy as np
import pytest

from revanneal.schedule import _validate_and_build, load_schedule


@pytest.fixture(scope="session")
def linear_curves():
    return load_schedule("linear")


@pytest.fixture(scope="session")
def dw_like_curves():
    return load_schedule("dw-like")


def make_curves(name="custom", a0=10.0, b0=10.0, npts=101):
    s = np.linspace(0.0, 1.0, npts)
    return _validate_and_build(name, s, a0 * (1.0 - s), b0 * s)


# One verdict line per acceptance criterion, echoed after the test report so
# they are visible regardless of output capturing.
ACCEPTANCE_LINES: list[str] = []


def record_criterion(line: str) -> None:
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
