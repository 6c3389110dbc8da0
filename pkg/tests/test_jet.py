from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pderel.algebra import Polynomial
from pderel.dsl import parse
from pderel.jet import (
    ApproximationData,
    DerivationError,
    JetPolynomial,
    JetVariable,
    derive_pde,
    discrete_defect,
    expand_cell,
    pde_equal_mod_scalar,
    pde_from_text,
    polynomial_jets,
)

F_RULE = "z[1,-1]/2 + z[-1,-1]*(1 + 2*z[-2,0])/(2*(1 + z[-1,-1]))"
G_RULE = "z[1,-1]/2 + z[-1,-1]*(1 + z[-2,0])/(2*(1 + z[-1,-1]))"

X = Polynomial.variable(0, 2)
S = Polynomial.variable(1, 2)
ONE = Polynomial.constant(1, 2)


def derive(text: str, alpha: int = 1, letter: str = "u"):
    rule = parse(text)
    return derive_pde(rule, ApproximationData(rule.stencil, 1, 1, 1, alpha), letter=letter)


def test_f_rule_golden():
    d = derive(F_RULE, letter="v")
    assert d.format() == "2v_s - v^2 + 2ε·v·v_x over 2(1+ε·v)"
    assert pde_equal_mod_scalar(d.reduced, pde_from_text("2*v_s + 2*eps*v*v_x - v^2", "v"))
    assert d.error_constant == 5
    assert tuple(d.class_tuple) == (8, 2, 1, 2, 1)
    assert not d.consistent


def test_g_rule_golden():
    d = derive(G_RULE)
    assert d.format() == "2u_s + ε·u·u_s + ε·u·u_x over 2(1+ε·u)"
    assert d.error_constant == 4


def test_scalar_multiples_are_the_same_pde():
    a = pde_from_text("4*u_s + eps*u*u_s + eps*u*u_x")
    b = pde_from_text("2*u_s + eps/2*u*(u_s + u_x)")
    assert pde_equal_mod_scalar(a, b)
    assert not pde_equal_mod_scalar(a, pde_from_text("4*u_s + eps*u*u_s"))


def _families(d, letter="u"):
    """Coefficients of eps^(i+j-1) u_{ix,js}, keyed by (i, j)."""
    out = {}
    for (deg, factors), c in d.reduced.items():
        ((var, power),) = factors
        assert power == 1
        out[(var.x_order, var.s_order)] = (c, deg)
    return out


def test_shift_in_time_family():
    # z[N,t] = z[N,t-1]: eps^(j-1)/j! u_{js} and eps^j/j! u_{x,js} from the (1,j) cells
    d = derive("z[0,-1]", alpha=4)
    fam = _families(d)
    for j in range(1, 5):
        assert fam[(0, j)] == (Fraction(1, math.factorial(j)), j - 1)
    for j in range(1, 4):
        assert fam[(1, j)] == (Fraction(1, math.factorial(j)), j)
    assert d.error_constant == Fraction(2**5 + 1, math.factorial(5))
    assert tuple(d.class_tuple) == (1, 1, 0, 1, 1)


def test_diagonal_shift_family():
    # z[N,t] = z[N-1,t-1]: the binomial family sum_{a+b=n} eps^(n-1)/(a! b!) u_{ax,bs}
    d = derive("z[-1,-1]", alpha=4)
    fam = _families(d)
    for n in range(1, 5):
        for a in range(n + 1):
            assert fam[(a, n - a)] == (Fraction(1, math.factorial(a) * math.factorial(n - a)), n - 1)
    assert d.error_constant == Fraction(4, 15)
    assert tuple(d.class_tuple) == (1, 1, 0, 0, 1)


def test_expand_cell_uses_shifts_from_the_base_cell():
    data = ApproximationData(((-1, -1),), 1, 1, 1, 1)
    e = expand_cell((2, 0), data)
    assert e.main.format() == "ε·u + 2ε^2·u_x"
    assert e.remainder.variables() == {JetVariable(2, 0, (2, 0))}


@settings(max_examples=40, deadline=None)
@given(
    st.integers(-2, 2),
    st.integers(-2, 2),
    st.lists(st.integers(-3, 3), min_size=6, max_size=6),
    st.integers(1, 3),
)
def test_expansion_is_exact_on_polynomials_of_low_degree(i, j, coefs, alpha):
    # a Taylor expansion to order alpha reproduces polynomials of degree <= alpha exactly
    monomials = [ONE, X, S, X * X, X * S, S * S]
    degree = [0, 1, 1, 2, 2, 2]
    u = sum((Polynomial.constant(c, 2) * m for c, m, d in zip(coefs, monomials, degree) if d <= alpha), Polynomial.constant(0, 2))
    data = ApproximationData(((-1, -1),), 1, 1, 1, alpha)
    pt, eps = (Fraction(1, 3), Fraction(2, 7)), Fraction(1, 5)
    jets = polynomial_jets(u, pt, alpha)
    got = expand_cell((i, j), data).main.evaluate(jets, eps)
    assert got == eps * u.evaluate([pt[0] + i * eps, pt[1] + j * eps])


def test_derived_pde_matches_direct_defect():
    # the discrete defect equals eps^m P/h up to the Taylor remainder; exact for this quadratic
    d = derive(F_RULE)
    u = ONE + X + S + X * S + X * X
    pt = (Fraction(1, 3), Fraction(1, 5))
    jets = polynomial_jets(u, pt, 2)
    rule = parse(F_RULE)
    for k in range(3, 7):
        eps = Fraction(1, 2**k)
        defect = discrete_defect(rule, d.data, lambda a, b: u.evaluate([a, b]), pt, eps)
        assert defect == d.approximation(jets, eps)


def _slope(errors):
    xs = [math.log(float(e)) for e, _ in errors]
    ys = [math.log(float(r)) for _, r in errors]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    return sum((a - mx) * (b - my) for a, b in zip(xs, ys)) / sum((a - mx) ** 2 for a in xs)


@pytest.mark.parametrize("u", [ONE + X + S + X * S, ONE + X * X * X + S * S, ONE + X * S * S + S * S * S])
def test_consistency_order(u):
    d = derive(F_RULE)
    rule = parse(F_RULE)
    pt = (Fraction(1, 3), Fraction(1, 5))
    jets = polynomial_jets(u, pt, 3)
    errors = []
    for k in range(3, 10):
        eps = Fraction(1, 2**k)
        defect = discrete_defect(rule, d.data, lambda a, b: u.evaluate([a, b]), pt, eps)
        errors.append((eps, abs(defect - d.approximation(jets, eps))))
    assert all(r > 0 for _, r in errors)
    assert _slope(errors) >= 2.9


def test_derivation_errors():
    with pytest.raises(ValueError):
        ApproximationData(((0, 0),))
    with pytest.raises(ValueError):
        ApproximationData(((1, 0),))
    with pytest.raises(DerivationError):
        derive("z[0,-1]/z[-1,-1]")


def test_jet_polynomial_arithmetic():
    u, ux = JetVariable(0, 0), JetVariable(1, 0)
    p = JetPolynomial.monomial(2, 1, u) + JetPolynomial.monomial(1, 0, ux)
    q = p * p
    assert q.evaluate({(0, 0): 3, (1, 0): 1}, Fraction(1, 2)) == (Fraction(3) + 1) ** 2
    assert (p - p).min_eps_degree() >= 0 and not (p - p)
    assert p.shift_eps(2).min_eps_degree() == 2
