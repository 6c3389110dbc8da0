from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import pytest

from pderel.dsl import parse
from pderel.dynamics import EvolutionError, EvolutionSpec, evolve, required_support, tabulate

from conftest import F_RULE


def test_support_of_the_burgers_stencil():
    sup = required_support(parse(F_RULE).stencil, (10, 10))
    assert sup.columns == range(2)
    assert sup.rows == range(1)
    assert sup.right_reach == 1
    assert sup.width == 20
    assert sup.prescribed(1, 5) and sup.prescribed(7, 0) and not sup.prescribed(2, 1)


def test_right_reach_rounds_up_per_step():
    assert required_support([(3, -2)], (4, 4)).right_reach == 2
    assert required_support([(-1, -1), (0, -1)], (4, 4)).right_reach == 0


def test_shift_flows_reproduce_their_closed_forms(shift_flows):
    z, w = shift_flows
    eps, l = Fraction(1, 2), 1000
    for N in range(9):
        for t in range(9):
            assert z(N, t) == (eps * N) ** l + 1
            assert w(N, t) == eps**l * Fraction(N - t) ** l + 1


def _reference(rule, boundary, window, right):
    """Independent recursion on memoised cells, straight from the rule text."""

    @lru_cache(maxsize=None)
    def cell(N, t):
        if N < 2 or t < 1:
            return boundary(N, t)
        a, b, c = cell(N - 1, t - 1), cell(N + 1, t - 1), cell(N - 2, t)
        return rule(a, b, c)

    return {(N, t): cell(N, t) for N in range(window[0] + 1) for t in range(window[1] + 1)}


def test_burgers_rule_against_reference_recursion():
    f = lambda a, b, c: b / 2 + a * (1 + 2 * c) / (2 * (1 + a))
    eps, l = Fraction(1, 10), 4
    bnd = lambda N, t: (eps * N) ** l + 1
    ref = _reference(f, bnd, (6, 6), 1)
    spec = EvolutionSpec(parse(F_RULE), parse("(eps*N)^l + 1"), {"eps": eps, "l": Fraction(l)})
    grid = evolve(spec, (6, 6))
    for (N, t), v in ref.items():
        assert grid(N, t) == v


def test_decimal_backend_tracks_exact():
    params = {"eps": Fraction(1, 10), "l": Fraction(20)}
    exact = evolve(EvolutionSpec(parse(F_RULE), parse("(eps*N)^l + 1"), params), (6, 6))
    approx = evolve(EvolutionSpec(parse(F_RULE), parse("(eps*N)^l + 1"), params, "decimal", 100), (6, 6))
    for N, t, v in exact.cells():
        assert abs(Fraction(approx(N, t)) - v) / v < Fraction(1, 10**95)


def test_provenance_and_csv():
    grid = tabulate(parse("N + t + 1"), (2, 2))
    assert grid(2, 1) == 4
    assert {p for row in grid.provenance for p in row} == {"prescribed"}
    text = grid.to_csv(exact=True)
    assert text.splitlines()[0] == "N,t,value,provenance"
    assert "2,1,4,prescribed" in text


def test_nonpositive_values_are_rejected():
    spec = EvolutionSpec(parse("z[0,-1] - 2"), parse("1"))
    with pytest.raises(EvolutionError) as info:
        evolve(spec, (2, 2))
    assert info.value.cell is not None


def test_invalid_stencil_and_backend():
    with pytest.raises(ValueError):
        EvolutionSpec(parse("z[1,0]"), parse("1"))
    with pytest.raises(ValueError):
        EvolutionSpec(parse("z[0,-1]"), parse("1"), backend="float")


def test_reruns_are_identical():
    spec = EvolutionSpec(parse(F_RULE), parse("(eps*N)^2 + 1"), {"eps": Fraction(1, 3), "l": Fraction(2)}, "decimal", 40)
    assert evolve(spec, (5, 5)).to_csv() == evolve(spec, (5, 5)).to_csv()
