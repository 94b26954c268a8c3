import sys

import numpy as np
import pytest

from udcs.densities import (builtin_bell_unit, builtin_gaussian1d,
                            builtin_shifted_exponential, builtin_uniform_on)
from udcs.regions import Box, Ellipsoid

ELLIPSE_K = [[4 / 3, -2 / 3], [-2 / 3, 4 / 3]]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def ellipse():
    return Ellipsoid(ELLIPSE_K)


def builtin_cases():
    """(name, density, variant) for the built-ins exercised by the suite."""
    return [
        ("gaussian", builtin_gaussian1d(), "unbounded"),
        ("exp3", builtin_shifted_exponential(3.0), "unbounded"),
        ("bell0.5", builtin_bell_unit(0.5), "bounded"),
        ("bell0.1", builtin_bell_unit(0.1), "bounded"),
        ("unit_interval", builtin_uniform_on(Box([0], [1])), "unbounded"),
        ("interval_0.75", builtin_uniform_on(Box([0], [0.75])), "unbounded"),
    ]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
