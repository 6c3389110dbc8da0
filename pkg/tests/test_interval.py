from __future__ import annotations

from decimal import Decimal
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pderel.interval import Const, Interval, Log, Power, ln_decimal

mpmath.mp.dps = 80
positive = st.fractions(min_value=Fraction(1, 1000), max_value=1000, max_denominator=1000)


def mp(q: Fraction):
    return mpmath.mpf(q.numerator) / q.denominator


def inside(iv: Interval, value) -> bool:
    """Exact check for rationals; mpmath values get slack far below the interval width."""
    if isinstance(value, Fraction):
        return Fraction(iv.lo) <= value <= Fraction(iv.hi)
    slack = mpmath.mpf("1e-70")
    return mpmath.mpf(str(iv.lo)) - slack <= value <= mpmath.mpf(str(iv.hi)) + slack


@settings(max_examples=80, deadline=None)
@given(positive, positive)
def test_arithmetic_encloses(a, b):
    A, B = Interval.point(a, 30), Interval.point(b, 30)
    assert inside(A + B, a + b)
    assert inside(A - B, a - b)
    assert inside(A * B, a * b)
    assert inside(A / B, a / b)


@settings(max_examples=80, deadline=None)
@given(positive)
def test_ln_and_exp_enclose(a):
    A = Interval.point(a, 30)
    assert inside(A.ln(), mpmath.log(mp(a)))
    assert inside(Interval.point(a / 100, 30).exp(), mpmath.exp(mp(a) / 100))


def test_ln_decimal_is_correctly_rounded():
    assert str(ln_decimal(Fraction(1000), 30)) == mpmath.nstr(mpmath.log(1000), 30, strip_zeros=False)


def test_exact_quantities():
    assert Power(Const(Fraction(2, 3)), Const(Fraction(5))).exact() == Fraction(32, 243)
    assert Power(Const(Fraction(2)), Const(Fraction(1, 2))).exact() is None
    assert Power(Const(Fraction(3)), Const(Fraction(10**8))).exact() is None
    assert Log(Const(Fraction(1))).exact() == 0
    q = (Const(Fraction(1, 3)) + 2) * Const(Fraction(3))
    assert q.exact() == 7


def test_irrational_power_enclosure():
    iv = Power(Const(Fraction(2)), Const(Fraction(1, 2))).enclose(50)
    assert inside(iv, mpmath.sqrt(2))
    assert iv.width < Decimal("1e-45")


def test_empty_interval_and_zero_divisor():
    with pytest.raises(ValueError):
        Interval(Decimal(2), Decimal(1))
    with pytest.raises(ZeroDivisionError):
        Interval.point(1) / Interval(Decimal(-1), Decimal(1))
