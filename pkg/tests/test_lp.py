from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pderel.lp import solve_lp

scipy_optimize = pytest.importorskip("scipy.optimize")


def test_small_optimum():
    res = solve_lp([3, 2], [[1, 1], [1, 3]], [4, 6])
    assert res.status == "optimal"
    assert res.objective == 12
    assert list(res.x) == [4, 0]


def test_infeasible_and_unbounded():
    assert solve_lp([1], [[1], [-1]], [1, -2]).status == "infeasible"
    assert solve_lp([1, 1], [[1, -1]], [1]).status == "unbounded"


def test_free_variables_and_equalities():
    res = solve_lp([1, 0], [], [], [[1, 1]], [Fraction(1, 3)], free=True, maximize=False)
    assert res.status == "unbounded"
    res = solve_lp([1, 1], [[1, 0], [0, 1]], [2, 3], [[1, -1]], [-1], free=True)
    assert res.objective == 5


coef = st.integers(-5, 5)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(coef, min_size=3, max_size=3),
    st.lists(st.lists(coef, min_size=3, max_size=3), min_size=2, max_size=4),
    st.lists(st.integers(0, 10), min_size=4, max_size=4),
)
def test_agrees_with_scipy(c, rows, rhs):
    rhs = rhs[: len(rows)]
    ours = solve_lp(c, rows, rhs)
    bounds = [(0, None)] * 3
    ref = scipy_optimize.linprog([-v for v in c], A_ub=rows, b_ub=rhs, bounds=bounds, method="highs")
    # HiGHS may report "infeasible or unbounded" as infeasible; a zero objective separates the two
    feasible = scipy_optimize.linprog([0, 0, 0], A_ub=rows, b_ub=rhs, bounds=bounds, method="highs").status == 0
    expected = "infeasible" if not feasible else {0: "optimal", 2: "unbounded", 3: "unbounded"}[ref.status]
    assert ours.status == expected
    if expected == "optimal":
        assert abs(float(ours.objective) + ref.fun) < 1e-7
        for row, b in zip(rows, rhs):
            assert sum(Fraction(a) * x for a, x in zip(row, ours.x)) <= b
