"""Property suites: positivity, Q symmetry, bound monotonicity, verdict agreement."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pderel.dsl import parse
from pderel.dynamics import EvolutionSpec, evolve, tabulate
from pderel.relation import (
    BandRates,
    CertificationError,
    QParams,
    RelationClass,
    bound_terms,
    bound_value,
    certify_terms,
    compare_enclosed,
    q_value,
)

STENCIL = ["z[-1,-1]", "z[1,-1]", "z[-2,0]", "z[0,-1]"]


def random_elementary_rule(rng: random.Random) -> str:
    """Sum of positive monomials over sum of positive monomials."""

    def poly():
        terms = []
        for _ in range(rng.randint(1, 3)):
            coef = Fraction(rng.randint(1, 5), rng.randint(1, 4))
            cells = [f"{rng.choice(STENCIL)}^{rng.randint(1, 2)}" for _ in range(rng.randint(0, 2))]
            terms.append("*".join([f"({coef.numerator}/{coef.denominator})"] + cells))
        return " + ".join(terms)

    return f"({poly()})/({poly()})"


def random_boundary(rng: random.Random) -> str:
    a, b, c = (Fraction(rng.randint(1, 9), rng.randint(1, 9)) for _ in range(3))
    return f"{a.numerator}/{a.denominator} + {b.numerator}/{b.denominator}*N^2 + {c.numerator}/{c.denominator}*t"


def test_positivity_on_one_hundred_random_rules():
    rng = random.Random(20240611)
    for _ in range(100):
        rule, boundary = random_elementary_rule(rng), random_boundary(rng)
        grid = evolve(EvolutionSpec(parse(rule), parse(boundary)), (3, 3))
        assert all(v > 0 for _, _, v in grid.cells()), rule


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False))
def test_positivity_decimal_backend(rng):
    rule, boundary = random_elementary_rule(rng), random_boundary(rng)
    grid = evolve(EvolutionSpec(parse(rule), parse(boundary), backend="decimal", precision=40), (3, 3))
    assert all(v > 0 for _, _, v in grid.cells())


positive_formula = st.tuples(st.integers(1, 9), st.integers(0, 3), st.integers(0, 3)).map(lambda t: f"{t[0]} + {t[1]}*N^2 + {t[2]}*t")


@settings(max_examples=40, deadline=None)
@given(positive_formula, positive_formula, st.integers(0, 2), st.sampled_from(["e", "ee"]))
def test_q_symmetric_and_nonnegative(fz, fw, L, flavor):
    z, w = tabulate(parse(fz), (4, 4)), tabulate(parse(fw), (4, 4))
    params = QParams(L=L, eps=Fraction(1, 2))
    for N, t in [(0, 0), (2, 3), (4, 4), (4, 1)]:
        a = q_value(z, w, (N, t), flavor, params)
        assert a >= 0
        assert a == q_value(w, z, (N, t), flavor, params)


LATTICE = {
    "M": [1, 2, 10, 1000],
    "c": [1, 2, 3, 5],
    "D": [1, 2, 3, 4],
    "L": [0, 1, 2, 3],
}


def test_bound_monotone_on_parameter_lattice():
    z = tabulate(parse("N^2 + t + 1"), (6, 6))
    w = tabulate(parse("N + 2*t^2 + 1"), (6, 6))
    eps, (N, t) = Fraction(1, 2), (2, 1)
    rates = {L: BandRates(z, w, L).rate(N, t).value for L in LATTICE["L"]}
    values = {}
    for M, c, D, L in itertools.product(*LATTICE.values()):
        cls = RelationClass(M=M, c=c, D=D, L=L, flavor="ee")
        values[(M, c, D, L)] = bound_value(cls, N * eps, t * eps, rates[L], "pointwise", eps, prec=50)
    assert len(values) == 4**4
    for key, v in values.items():
        for axis in range(4):
            idx = LATTICE[list(LATTICE)[axis]].index(key[axis])
            if idx + 1 < 4:
                up = list(key)
                up[axis] = LATTICE[list(LATTICE)[axis]][idx + 1]
                assert values[tuple(up)] >= v


def _exact_eligible_cases():
    rng = random.Random(7)
    cases = []
    for _ in range(60):
        cls = RelationClass(M=rng.randint(1, 50), c=rng.randint(1, 3), D=rng.randint(1, 2), L=1, flavor="e")
        x, s = Fraction(rng.randint(0, 4), 2), Fraction(rng.randint(0, 4), 2)
        rate = Fraction(rng.randint(1, 30), rng.randint(1, 5)) + 1
        terms = bound_terms(cls, x, s, rate, "pointwise", Fraction(1, 2))
        exact_rhs = 1
        for b, e in terms:
            exact_rhs *= b.exact() ** e.exact()
        lhs = exact_rhs * Fraction(rng.choice([1, 3, 1000, 999]), 1000) + rng.choice([0, Fraction(1, 10**6)])
        cases.append((lhs, terms, lhs == exact_rhs))
    return cases


@pytest.mark.parametrize("lhs,terms,tie", _exact_eligible_cases())
def test_exact_and_decimal_verdicts_agree(lhs, terms, tie):
    exact, method, *_ = certify_terms(lhs, terms, method="exact")
    assert method == "exact-rational-power"
    if tie:
        # equality is decided exactly; enclosures can only refuse, never guess
        assert exact == "satisfied"
        with pytest.raises(CertificationError):
            compare_enclosed(lhs, terms, cap=200)
        return
    enclosed, *_ = compare_enclosed(lhs, terms)
    assert exact == enclosed


def test_verdicts_agree_on_every_unrelated_pair_certificate(shift_flows):
    z, w = shift_flows
    cls = RelationClass(M=1000, c=1, D=1, L=0, alpha=1000)
    rates = BandRates(z, w, 0)
    for N in range(9):
        for t in range(9):
            terms = bound_terms(cls, N * Fraction(1, 2), t * Fraction(1, 2), rates.rate(N, t).value, "pointwise", Fraction(1, 2))
            lhs = rates.ratio(N, t)
            exact, method, *_ = certify_terms(lhs, terms, method="exact")
            assert exact == compare_enclosed(lhs, terms)[0]
