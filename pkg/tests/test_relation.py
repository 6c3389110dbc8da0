from __future__ import annotations

import math
from decimal import Decimal
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pderel.dsl import parse
from pderel.dynamics import tabulate
from pderel.interval import Const, Power
from pderel.relation import (
    BandRates,
    BoundExtras,
    CertificationError,
    QParams,
    RelationClass,
    bound_terms,
    bound_value,
    certify_point,
    certify_terms,
    compare_enclosed,
    compare_exact,
    propagation_constants,
    q_table,
    q_value,
    render_q,
    two_sided_ratio,
)


def brute_rate(z, w, L, N0, t0):
    cells = [(n, a) for a in range(L + 1) for n in range(N0 + 1)] + [(a, s) for a in range(L + 1) for s in range(t0 + 1)]
    return max(two_sided_ratio(z(*c), w(*c)) for c in cells)


def test_two_sided_ratio():
    assert two_sided_ratio(2, 8) == two_sided_ratio(8, 2) == 4
    assert two_sided_ratio(3, 3) == 1


@pytest.mark.parametrize("L", [0, 1, 2])
def test_band_rate_matches_brute_force(shift_flows, L):
    z, w = shift_flows
    rates = BandRates(z, w, L)
    for N in range(9):
        for t in range(9):
            assert rates.rate(N, t).value == brute_rate(z, w, L, N, t)


def test_rate_argmax_attains_value(shift_flows):
    z, w = shift_flows
    rep = BandRates(z, w, 1).rate(8, 8)
    assert two_sided_ratio(z(*rep.argmax), w(*rep.argmax)) == rep.value


def test_q_is_symmetric_and_nonnegative(shift_flows):
    z, w = shift_flows
    params = QParams(L=0, eps=Fraction(1, 2))
    for N in range(9):
        for t in range(9):
            a = q_value(z, w, (N, t), "e", params)
            assert a >= 0
            assert a == q_value(w, z, (N, t), "e", params)


def test_q_against_float_logs(shift_flows):
    z, w = shift_flows
    table = q_table(z, w, (8, 8), "e", QParams(L=0, eps=Fraction(1, 2)))
    for N in range(9):
        for t in range(9):
            r = two_sided_ratio(z(N, t), w(N, t))
            rate = brute_rate(z, w, 0, N, t)
            ref = max(0.0, _flog(r) - _flog(rate))
            assert abs(float(table.values[N][t]) - ref) < 1e-9


def _flog(q: Fraction) -> float:
    return math.log(q.numerator) - math.log(q.denominator)


def test_render_styles():
    assert render_q(Decimal(0)) == "0.0"
    assert render_q(Decimal("0.69314718")) == "0.6931"
    assert render_q(Decimal("404.7751")) == "404.8"
    assert render_q(Decimal("64.4968")) == "64.50"
    assert render_q(Decimal("0.09531"), "dec3") == "0.095"


def test_bound_values():
    cls = RelationClass(M=1000, c=1, D=1, L=0)
    v = bound_value(cls, 4, 4, 1, "pointwise", Fraction(1, 2))
    mpmath.mp.dps = 110
    assert abs(mpmath.mpf(str(v)) - 18 * mpmath.log(1000)) < mpmath.mpf("1e-95")
    assert abs(float(v) - 124.34) < 0.01
    lemma = bound_value(cls, 1, 1, 1, "doubling", Fraction(1, 10))
    assert abs(float(lemma) - 2**34 * math.log(40)) / float(lemma) < 1e-12


def test_bound_parameter_checks():
    cls = RelationClass(M=2)
    with pytest.raises(ValueError):
        bound_terms(cls, 1, 1, 1, "doubling", Fraction(1, 2))
    with pytest.raises(ValueError):
        bound_terms(cls, 1, 1, 1, "pointwise", Fraction(2))
    with pytest.raises(ValueError):
        RelationClass(M=Fraction(1, 2))
    with pytest.raises(ValueError):
        RelationClass(M=2, flavor="x")


def test_double_exponential_bound_with_c_one_reduces_to_single():
    e = RelationClass(M=5, c=3, flavor="e")
    assert e.effective_c == 1
    ee = RelationClass(M=5, c=3, flavor="ee")
    assert ee.effective_c == 3


def test_propagation_constants():
    assert propagation_constants(2, 3, 2) == (Fraction(4) ** 4, Fraction(9))
    assert propagation_constants(2, 1, 1) == (Fraction(4) ** 8, Fraction(1))
    with pytest.raises(ValueError):
        propagation_constants(2, 4, 1)


def test_exact_and_enclosed_comparisons_agree():
    terms = [(Fraction(1000), Fraction(18)), (Fraction(3), Fraction(1))]
    big = Fraction(1000) ** 18 * 3
    assert compare_exact(big + 1, terms) == "violated"
    assert compare_exact(big, terms) == "satisfied"
    qterms = [(Const(b), Const(e)) for b, e in terms]
    assert compare_enclosed(big + 1, qterms)[0] == "violated"
    assert compare_enclosed(big - 1, qterms)[0] == "satisfied"


def test_enclosure_that_cannot_separate_raises():
    qterms = [(Power(Const(Fraction(2)), Const(Fraction(1, 2))), Const(Fraction(2)))]
    with pytest.raises(CertificationError):
        compare_enclosed(Fraction(2), qterms, prec=20, cap=80)


def test_method_fallback_when_exact_is_too_large():
    terms = [(Const(Fraction(3)), Const(Fraction(10**9)))]
    verdict, method, prec, *_ = certify_terms(Fraction(2), terms)
    assert (verdict, method) == ("satisfied", "directed-rounding")
    with pytest.raises(CertificationError):
        certify_terms(Fraction(2), terms, method="exact")


def test_certificate_text_is_reproducible(shift_flows):
    z, w = shift_flows
    cls = RelationClass(M=1000, c=1, D=1, L=0, alpha=1000)
    a = certify_point(z, w, (3, 1), cls, "pointwise", Fraction(1, 2))
    b = certify_point(z, w, (3, 1), cls, "pointwise", Fraction(1, 2))
    assert a.verdict == "violated"
    assert a.method == "exact-rational-power"
    assert a.text() == b.text()
    assert "verdict violated" in a.text()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.fractions(1, 10, max_denominator=5))
def test_ratio_equal_one_gives_zero_q(N, t, c):
    z = tabulate(parse("N + t + 1"), (3, 3))
    w = tabulate(parse(f"{c.numerator}/{c.denominator}*(N + t + 1)"), (3, 3))
    # a constant ratio equals the initial rate everywhere
    assert q_value(z, w, (N, t), "e", QParams(L=0, eps=Fraction(1, 2))) == 0
