from __future__ import annotations

from decimal import Context, Decimal
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pderel.dsl import (
    EvaluationError,
    NotASquareError,
    ParseError,
    UnboundSymbolError,
    differentiate,
    evaluate,
    evaluate_decimal,
    parse,
    substitute,
    to_rational_function,
    to_text,
)


def test_stencil_recorded_literally_and_sorted():
    e = parse("z[+2,0]/2 + z[0,0]*(1+2*z[-1,+1])/(2*(1+z[0,0]))")
    assert set(e.stencil) == {(2, 0), (0, 0), (-1, 1)}
    assert list(e.stencil) == sorted(e.stencil, key=lambda o: (o[1], o[0]))


def test_stencil_from_origin_adds_one_to_each_offset():
    e = parse("z[1,-1] + z[-2,0]")
    assert set(e.stencil_from_origin) == {(2, 0), (-1, 1)}


def test_evaluate_exact():
    e = parse("z[1,-1]/2 + z[-1,-1]*(1 + 2*z[-2,0])/(2*(1 + z[-1,-1]))")
    cells = {(1, -1): Fraction(3), (-1, -1): Fraction(1), (-2, 0): Fraction(2)}
    assert evaluate(e, {}, cells.__getitem__) == Fraction(3, 2) + Fraction(5, 4)


def test_power_and_sqrt():
    assert evaluate(parse("(eps*N)^3 + 1"), {"eps": Fraction(1, 2), "N": 4}) == 9
    assert evaluate(parse("sqrt(9/4)")) == Fraction(3, 2)
    assert evaluate(parse("2^-2")) == Fraction(1, 4)
    with pytest.raises(NotASquareError):
        evaluate(parse("sqrt(2)"))


def test_decimal_sqrt_of_non_square():
    v = evaluate_decimal(parse("sqrt(2)"), {}, None, Context(prec=50))
    assert abs(v * v - 2) < Decimal("1e-48")


@pytest.mark.parametrize(
    "text",
    ["z[1,", "1 +", "x^(1/2)", "x^z[0,-1]", "2 ** 3", "z[1,-1", "(1", "1 2"],
)
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse(text)


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as info:
        parse("1 + * 2")
    assert "column 5" in str(info.value)


def test_unbound_symbol():
    with pytest.raises(UnboundSymbolError):
        evaluate(parse("eps + 1"))


def test_differentiate_and_substitute():
    d = differentiate(parse("x^3 + x*s"), "x")
    assert evaluate(d, {"x": 2, "s": 5}) == 17
    e = substitute(parse("x + y"), {"y": Fraction(1, 3)})
    assert evaluate(e, {"x": 1}) == Fraction(4, 3)


def test_rational_function_of_rule():
    rf = to_rational_function(parse("z[1,-1]/2 + z[-1,-1]/(1 + z[-1,-1])"), [(-1, -1), (1, -1)])
    point = [Fraction(2), Fraction(3)]
    assert rf.num.evaluate(point) / rf.den.evaluate(point) == Fraction(3, 2) + Fraction(2, 3)


# -- printer round trip -----------------------------------------------------------

leaf = st.one_of(
    st.integers(0, 20).map(str),
    st.sampled_from(["x", "eps", "z[0,-1]", "z[-1,-1]", "z[2,-3]"]),
)


def _combine(children):
    return st.one_of(
        st.tuples(children, st.sampled_from("+-*/"), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        children.map(lambda c: f"-({c})"),
        st.tuples(children, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}"),
    )


expressions = st.recursive(leaf, _combine, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(expressions)
def test_print_parse_is_a_fixed_point(text):
    e = parse(text)
    printed = to_text(e)
    again = parse(printed)
    assert to_text(again) == printed
    assert again.stencil == e.stencil


@settings(max_examples=100, deadline=None)
@given(expressions, st.fractions(min_value=1, max_value=5, max_denominator=7))
def test_printing_preserves_value(text, x):
    e = parse(text)
    binding = {"x": x, "eps": Fraction(1, 3)}
    cells = lambda off: Fraction(off[0] + 5, off[1] + 7)
    try:
        v = evaluate(e, binding, cells)
    except EvaluationError:  # division by zero
        return
    assert evaluate(parse(to_text(e)), binding, cells) == v
