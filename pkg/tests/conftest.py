import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chronon.core import Grid, WellConfig
from chronon.models import Instantaneous, QuenchScenario


@pytest.fixture(scope="session")
def reference():
    """L = 1, V0 = 200, V1 = 400, 2048 points, ground states."""
    well = WellConfig(0.0, 1.0, 200.0, 400.0, 0.0)
    grid = Grid.for_well(well, 2048)
    return QuenchScenario.build(grid, well, Instantaneous())


@pytest.fixture(scope="session")
def strong():
    """Shallow post-quench wall (V1 = 5): a 0.1-wide detector at x = 0.5 sees
    |p1 - p0| ~ 0.06, enough for 1e5 trials per phase."""
    well = WellConfig(0.0, 1.0, 200.0, 5.0, 0.0)
    grid = Grid.for_well(well, 2048, margin=3.0)
    return QuenchScenario.build(grid, well, Instantaneous())


@pytest.fixture(scope="session")
def degenerate():
    well = WellConfig(0.0, 1.0, 200.0, 200.0, 0.0)
    grid = Grid.for_well(well, 2048)
    return QuenchScenario.build(grid, well, Instantaneous())


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "LINES", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.LINES:
        terminalreporter.write_line(line)
