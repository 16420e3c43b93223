import pytest

from lipsharp.capacity import BumpSpec, make_bump
from lipsharp.cubetree import default_params, relaxed_demo_params
from lipsharp.lorentz import LogProfile
from lipsharp.sharpfn import SharpExample


@pytest.fixture(scope="session")
def strict():
    return default_params(2)


@pytest.fixture(scope="session")
def relaxed():
    return relaxed_demo_params(2)


@pytest.fixture(scope="session")
def example(strict):
    return SharpExample(strict)


@pytest.fixture(scope="session")
def small_bump():
    """The eps = 0.1 bump used throughout the capacity checks."""
    return make_bump(BumpSpec((0, 0), 0.1, 1.0, 2, LogProfile(2), 0.05))


@pytest.fixture(scope="session")
def wide_bump():
    """A bump wide enough to resolve on a grid over [-1, 1]^2."""
    return make_bump(BumpSpec((0, 0), 0.5, 1.0, 2, LogProfile(2), 0.05))


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
