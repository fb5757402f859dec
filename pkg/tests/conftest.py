import math

import pytest

from polycf.geometry.fitting import build_cld_spec
from polycf.geometry.polyhedron import build_platonic

SOLIDS = ("cube", "tetrahedron", "octahedron")


@pytest.fixture(scope="session")
def solids():
    return {name: build_platonic(name) for name in SOLIDS}


@pytest.fixture(scope="session")
def oracle_specs(solids):
    """Fitted specs of the three unit-edge solids (about a minute and a half in total)."""
    return {name: build_cld_spec(p, depth=3) for name, p in solids.items()}


@pytest.fixture(scope="session")
def cube_exact_small_r():
    """Closed-form CF of the unit cube on [0, 1]: 1 - 3r/2 + 2r^2/pi - r^3/(4 pi)."""
    return lambda r: 1 - 1.5 * r + 2 * r ** 2 / math.pi - r ** 3 / (4 * math.pi)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion."""
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
