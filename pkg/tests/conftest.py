import numpy as np
import pytest

from hilbertkin.velocity import build_velocity_grid, equilibrium_uniform


@pytest.fixture
def circle():
    return build_velocity_grid(2, 1.0, 16)


@pytest.fixture
def uniform(circle):
    return equilibrium_uniform(circle)


@pytest.fixture
def rng():
    return np.random.default_rng(20241015)


_ACCEPTANCE_LINES = []


@pytest.fixture
def report_line():
    """Record one acceptance line; all lines are echoed in the terminal summary."""
    def add(number, ok, text, seconds):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {text} [{seconds:.2f} s]"
        _ACCEPTANCE_LINES.append(line)
        print(line)
    return add


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
