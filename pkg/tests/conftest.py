from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import settings

from pderel.dynamics import EvolutionSpec, evolve
from pderel.dsl import parse

# fixed example sequences keep the recorded test output reproducible
settings.register_profile("reproducible", derandomize=True, deadline=None)
settings.load_profile("reproducible")

F_RULE = "z[1,-1]/2 + z[-1,-1]*(1 + 2*z[-2,0])/(2*(1 + z[-1,-1]))"
G_RULE = "z[1,-1]/2 + z[-1,-1]*(1 + z[-2,0])/(2*(1 + z[-1,-1]))"
Z_BOUNDARY = "(eps*N)^l + 1"
W_BOUNDARY = "eps^l*(N - t)^l + 1"


def _pair(rule_z, rule_w, eps, backend, window):
    params = {"eps": Fraction(eps), "l": Fraction(1000)}
    z = evolve(EvolutionSpec(parse(rule_z), parse(Z_BOUNDARY), params, backend, 100), window)
    w = evolve(EvolutionSpec(parse(rule_w), parse(W_BOUNDARY), params, backend, 100), window)
    return z, w


@pytest.fixture(scope="session")
def shift_flows():
    """Unrelated pair: shift rules, eps = 1/2, exact arithmetic, 9 x 9 window."""
    return _pair("z[0,-1]", "z[-1,-1]", Fraction(1, 2), "exact", (8, 8))


@pytest.fixture(scope="session")
def burgers_flows():
    """Related pair: the two Burgers-type rules, eps = 1/10, 100 digits, 11 x 11 window."""
    return _pair(F_RULE, G_RULE, Fraction(1, 10), "decimal", (10, 10))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
