"""Closed-form solutions, residual and norm checks, and unrelatedness witnesses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Context, Decimal, localcontext
from fractions import Fraction
from math import comb
from typing import Mapping, Sequence

from .algebra import Polynomial
from .dsl import (
    EvaluationError,
    Expression,
    NotASquareError,
    differentiate,
    evaluate,
    evaluate_decimal,
    parse,
    substitute,
    to_rational_function,
)
from .dynamics import EvolutionSpec
from .interval import Const, Power
from .jet import JetPolynomial, JetVariable
from .relation import BoundExtras, RelationClass, bound_terms, certify_terms


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class ClosedFormSolution:
    """u(x, s) given by a formula, on (0, A0) x [0, T0)."""

    expression: Expression
    parameters: Mapping[str, Fraction] = field(default_factory=dict)
    domain: tuple[Fraction, Fraction] = (Fraction(1), Fraction(1))
    derivatives: Mapping[tuple[int, int], Expression] = field(default_factory=dict)

    @classmethod
    def from_text(cls, text: str, parameters: Mapping[str, object] | None = None, domain=(1, 1)) -> ClosedFormSolution:
        params = {k: Fraction(v) for k, v in (parameters or {}).items()}
        return cls(parse(text), params, (Fraction(domain[0]), Fraction(domain[1])))

    def _binding(self, x, s) -> dict:
        b = dict(self.parameters)
        b.update(x=Fraction(x), s=Fraction(s))
        return b

    def value(self, x, s) -> Fraction:
        return evaluate(self.expression, self._binding(x, s))

    def value_decimal(self, x, s, prec: int = 50) -> Decimal:
        return evaluate_decimal(self.expression, self._binding(x, s), context=Context(prec=prec))

    def __call__(self, x, s):
        try:
            return self.value(x, s)
        except NotASquareError:
            return self.value_decimal(x, s)

    def polynomial(self) -> Polynomial | None:
        """The solution as a polynomial in (x, s) when it is one."""
        try:
            rf = to_rational_function(self.expression, ["x", "s"], self.parameters)
        except EvaluationError:
            return None
        return rf.num if rf.is_polynomial() else None

    def derivative(self, i: int, j: int) -> Expression:
        if (i, j) in self.derivatives:
            return self.derivatives[(i, j)]
        e = substitute(self.expression, {k: v for k, v in self.parameters.items()})
        for _ in range(i):
            e = differentiate(e, "x")
        for _ in range(j):
            e = differentiate(e, "s")
        return e


def characteristics_solution(mu) -> ClosedFormSolution:
    """u = 1 - xi for u_s + mu u/(1 + mu u) u_x = 0 with u(x, 0) = 1 - x.

    xi is the smaller root of mu xi^2 - (1 + mu(x - s + 1)) xi + (1 + mu) x - mu s = 0.
    """
    mu = Fraction(mu)
    if mu <= 0:
        raise DomainError("mu must be positive")
    text = "1 - (B - sqrt(B^2 - 4*mu*C))/(2*mu)"
    expr = substitute(parse(text), {"B": parse("1 + mu*(x - s + 1)").tree, "C": parse("(1 + mu)*x - mu*s").tree})
    return ClosedFormSolution(expr, {"mu": mu}, (Fraction(1), Fraction(1)))


def characteristic_root(mu, x, s, prec: int = 50) -> Decimal:
    """xi(x, s) through the quadratic formula, for cross-checking."""
    ctx = Context(prec=prec)
    with localcontext(ctx):
        mu, x, s = (Decimal(Fraction(v).numerator) / Decimal(Fraction(v).denominator) for v in (mu, x, s))
        B = 1 + mu * (x - s + 1)
        disc = B * B - 4 * mu * ((1 + mu) * x - mu * s)
        if disc < 0:
            raise DomainError("negative discriminant")
        return (B - disc.sqrt()) / (2 * mu)


# -- finite-difference jets ----------------------------------------------------


def _central(order: int) -> list[tuple[Fraction, int]]:
    """Weights and half-step offsets of the central difference of given order."""
    return [(Fraction((-1) ** k * comb(order, k)), order - 2 * k) for k in range(order + 1)]


def fd_jets(sol: ClosedFormSolution, point, order: int, step=Fraction(1, 10**4), prec: int = 50) -> dict:
    x0, s0 = map(Fraction, point)
    h = Fraction(step)
    ctx = Context(prec=prec)
    cache: dict = {}

    def u(a: int, b: int) -> Decimal:  # value at half-step offsets a, b
        if (a, b) not in cache:
            cache[(a, b)] = sol.value_decimal(x0 + a * h / 2, s0 + b * h / 2, prec)
        return cache[(a, b)]

    jets = {}
    with localcontext(ctx):
        hd = Decimal(h.numerator) / Decimal(h.denominator)
        for i in range(order + 1):
            for j in range(order + 1 - i):
                total = Decimal(0)
                for wi, a in _central(i):
                    for wj, b in _central(j):
                        total += Decimal(int(wi * wj)) * u(a, b)
                jets[(i, j)] = total / hd ** (i + j)
    return jets


def residual(
    sol: ClosedFormSolution,
    pde: JetPolynomial,
    point,
    step=Fraction(1, 10**4),
    eps=Fraction(0),
    method: str = "fd",
    prec: int = 50,
):
    """The PDE evaluated on the solution's jets at ``point``.

    ``method`` is "fd" (central differences at ``step``) or "exact"
    (symbolic derivatives, exact arithmetic).
    """
    x, s = map(Fraction, point)
    order = pde.max_order()
    if method == "exact":
        poly = sol.polynomial()
        if poly is not None:
            jets = {}
            for i in range(order + 1):
                for j in range(order + 1 - i):
                    d = poly
                    for _ in range(i):
                        d = d.derivative(0)
                    for _ in range(j):
                        d = d.derivative(1)
                    jets[(i, j)] = d.evaluate([x, s])
        else:
            jets = {(i, j): evaluate(sol.derivative(i, j), sol._binding(x, s)) for i in range(order + 1) for j in range(order + 1 - i)}
        return pde.evaluate(jets, Fraction(eps))
    margin = 2 * Fraction(step) * max(order, 1)
    A0, T0 = sol.domain
    if not (margin <= x <= A0 - margin and margin <= s <= T0 - margin):
        raise DomainError(f"point {point} is closer than {margin} to the domain boundary")
    jets = fd_jets(sol, point, order, step, prec)
    with localcontext(Context(prec=prec)):
        e = Decimal(Fraction(eps).numerator) / Decimal(Fraction(eps).denominator)
        return pde.evaluate(jets, e)


@dataclass(frozen=True)
class KRate:
    value: Fraction | Decimal
    exact: bool
    spacing: Fraction | None


def k_rate(sol: ClosedFormSolution, order: int, spacing=Fraction(1, 100), box=None, prec: int = 30) -> KRate:
    """sup of all order-``order`` derivatives over inf u.

    Exactly 0 when every such derivative vanishes identically; otherwise a
    lower estimate from a rational grid.
    """
    poly = sol.polynomial()
    if poly is not None:
        derivs = []
        for i in range(order + 1):
            d = poly
            for _ in range(i):
                d = d.derivative(0)
            for _ in range(order - i):
                d = d.derivative(1)
            derivs.append(d)
        if all(not d for d in derivs):
            return KRate(Fraction(0), True, None)
    spacing = Fraction(spacing)
    (x0, x1), (s0, s1) = box or ((spacing, sol.domain[0]), (Fraction(0), sol.domain[1]))
    xs = [x0 + k * spacing for k in range(int((x1 - x0) / spacing)) if x0 + k * spacing < x1]
    ss = [s0 + k * spacing for k in range(int((s1 - s0) / spacing)) if s0 + k * spacing < s1]
    exprs = [sol.derivative(i, order - i) for i in range(order + 1)]
    sup, inf = Decimal(0), None
    ctx = Context(prec=prec)
    for x in xs:
        for s in ss:
            b = sol._binding(x, s)
            inf = min(inf, sol.value_decimal(x, s, prec)) if inf is not None else sol.value_decimal(x, s, prec)
            for e in exprs:
                sup = max(sup, abs(evaluate_decimal(e, b, context=ctx)))
    if inf is None or inf <= 0:
        raise DomainError("solution is not positive on the grid")
    return KRate(ctx.divide(sup, inf), False, spacing)


# -- witnesses -------------------------------------------------------------------


@dataclass(frozen=True)
class LinearWitness:
    M: Fraction
    D: Fraction
    L: int
    eps: Fraction
    a0: Fraction
    b0: Fraction
    l: int
    ratio: Fraction  # u/v at the test point (a0, b0)
    rate_bound: Fraction  # max(2^(l+1), b0^l + 1)
    exponent: Fraction  # eps^-D (a0 + b0 + 1)
    verdict: str
    method: str

    def text(self) -> str:
        return (
            f"linear witness M={self.M} D={self.D} L={self.L} eps={self.eps}\n"
            f"a0={self.a0} b0={self.b0} l={self.l}\n"
            f"test point (x,s)=({self.a0},{self.b0})\n"
            f"bound M^{self.exponent} * max(2^(l+1), b0^l+1)\n"
            f"verdict {self.verdict} ({self.method})\n"
        )


def pair_admissible(a0, b0) -> bool:
    a0, b0 = Fraction(a0), Fraction(b0)
    return b0 >= 3 and a0 > b0 and a0 / (a0 - b0) > b0


def _growth(a0: Fraction, b0: Fraction) -> Fraction:
    return min(a0 / b0, a0 / ((a0 - b0) * b0))


def _scale(eps: Fraction, D: Fraction) -> Fraction:
    if D.denominator != 1:
        raise ValueError("D must be an integer for an exact witness")
    return eps ** (-int(D))


def minimal_even_l(M, D, eps, a0, b0) -> int:
    """Least even l with l * log(growth) > E log M + log 4."""
    E = _scale(Fraction(eps), Fraction(D)) * (a0 + b0 + 1)
    need = (float(E) * math.log(float(M)) + math.log(4)) / math.log(float(_growth(a0, b0)))
    l = max(2, math.floor(need) + 1)
    l += l % 2
    # guard the float threshold with exact powers
    g = _growth(a0, b0)
    while l > 2 and _threshold_holds(M, E, g, l - 2):
        l -= 2
    while not _threshold_holds(M, E, g, l):
        l += 2
    return l


def _threshold_holds(M, E: Fraction, g: Fraction, l: int) -> bool:
    # g^l / 4 > M^E  <=>  (g^l / 4)^q > M^p
    p, q = E.numerator, E.denominator
    return (g**l / 4) ** q > Fraction(M) ** p


def linear_certificate(M, D, eps, a0, b0, l: int, method: str = "auto"):
    a0, b0 = Fraction(a0), Fraction(b0)
    ratio = (a0**l + 1) / ((a0 - b0) ** l + 1)
    rate_bound = max(Fraction(2) ** (l + 1), b0**l + 1)
    E = _scale(Fraction(eps), Fraction(D)) * (a0 + b0 + 1)
    terms = [(Const(Fraction(M)), Const(E)), (Const(rate_bound), Const(Fraction(1)))]
    verdict, how, *_ = certify_terms(ratio, terms, method)
    return ratio, rate_bound, E, verdict, how


def _candidate_pairs(max_den: int = 5, b_max: int = 6):
    seen = set()
    for den in range(1, max_den + 1):
        for bn in range(3 * den, b_max * den + 1):
            b0 = Fraction(bn, den)
            hi = b0 * b0 / (b0 - 1)
            an = bn + 1
            while Fraction(an, den) < hi:
                pair = (Fraction(an, den), b0)
                if pair not in seen and pair_admissible(*pair):
                    seen.add(pair)
                    yield pair
                an += 1


def witness_linear(M, D, L, pair: tuple | None = None) -> LinearWitness:
    """A test point and even l where u = x^l + 1 and v = (x - s)^l + 1 break the exponential bound."""
    M, D = Fraction(M), Fraction(D)
    if M < 1 or D < 1 or L < 1:
        raise ValueError("M, D and L must be at least 1")
    eps = min(Fraction(1), Fraction(1, L))
    if pair is not None:
        a0, b0 = map(Fraction, pair)
        if not pair_admissible(a0, b0):
            raise ValueError(f"pair {pair} violates b0 >= 3, a0 > b0, a0/(a0-b0) > b0")
    else:
        a0, b0 = min(_candidate_pairs(), key=lambda p: (minimal_even_l(M, D, eps, *p), p))
    l = minimal_even_l(M, D, eps, a0, b0)
    ratio, rate_bound, E, verdict, how = linear_certificate(M, D, eps, a0, b0, l)
    return LinearWitness(M, D, L, eps, a0, b0, l, ratio, rate_bound, E, verdict, how)


@dataclass(frozen=True)
class TranslationWitness:
    delta0: Fraction
    delta: Fraction
    I0: Fraction
    C: Fraction
    C_prime: Fraction
    eps: Fraction
    L: int
    rate_bound: Fraction  # 2 C' / delta0
    violation_ratio: Fraction  # C / delta
    v_at_test_point: Fraction
    verdict: str | None  # against the configured class, if any
    method: str | None
    log_max_delta: Decimal | None  # largest log(delta) that still violates

    def v(self) -> Expression:
        return parse(f"1 - (x + {self.I0.numerator}/{self.I0.denominator}*s)")

    def text(self) -> str:
        out = (
            f"translation witness delta0={self.delta0} delta={self.delta} eps={self.eps} L={self.L}\n"
            f"I0={self.I0}\n"
            f"v(x,s) = 1 - (x + I0 s); v(delta0,delta0) = {self.v_at_test_point}\n"
            f"rate bound 2C'/delta0 = {self.rate_bound}\n"
            f"violation ratio C/delta = {self.violation_ratio}\n"
        )
        if self.verdict:
            out += f"verdict {self.verdict} ({self.method})\nlog max delta {self.log_max_delta}\n"
        return out


def witness_translation(delta0, delta, C, C_prime, eps, L: int, cls: RelationClass | None = None, prec: int = 100) -> TranslationWitness:
    """Translation solution v = 1 - (x + I0 s) against a solution bounded by C <= u <= C'."""
    delta0, delta, C, Cp, eps = map(Fraction, (delta0, delta, C, C_prime, eps))
    if not 0 < delta0 <= Fraction(1, 4):
        raise ValueError("delta0 must lie in (0, 1/4]")
    if not 0 < delta < 1 - delta0:
        raise ValueError("delta must lie in (0, 1 - delta0)")
    if C <= 0 or Cp < C:
        raise ValueError("need 0 < C <= C'")
    I0 = (1 - delta0 - delta) / delta0
    if I0 <= 0:
        raise ValueError("I0 must be positive")
    if I0 * L * eps > delta0:
        raise ValueError(f"smallness condition I0 L eps <= delta0 fails ({I0 * L * eps} > {delta0})")
    v_test = 1 - delta0 - I0 * delta0
    rate_bound = 2 * Cp / delta0
    ratio = C / delta
    verdict = how = log_max = None
    if cls is not None:
        terms = bound_terms(cls, delta0, delta0, rate_bound, "pointwise", eps)
        verdict, how, *_ = certify_terms(ratio, terms, prec=prec)
        from .relation import log_of_terms
        from .interval import ln_decimal

        log_max = Context(prec=prec).subtract(ln_decimal(C, prec), log_of_terms(terms, prec + 10).hi)
    return TranslationWitness(delta0, delta, I0, C, Cp, eps, L, rate_bound, ratio, v_test, verdict, how, log_max)


# -- polynomial flows --------------------------------------------------------------


@dataclass(frozen=True)
class PolynomialFlow:
    l: int
    eps: Fraction

    def z(self, N: int, t: int) -> Fraction:
        return (self.eps * N) ** self.l + 1

    def w(self, N: int, t: int) -> Fraction:
        return self.eps**self.l * Fraction(N - t) ** self.l + 1

    def parameters(self) -> dict[str, Fraction]:
        return {"eps": self.eps, "l": Fraction(self.l)}

    def specs(self, backend: str = "exact", precision: int = 100) -> tuple[EvolutionSpec, EvolutionSpec]:
        """Shift rules driven by the closed forms on the prescribed cells."""
        p = self.parameters()
        return (
            EvolutionSpec(parse("z[0,-1]"), parse("(eps*N)^l + 1"), p, backend, precision),
            EvolutionSpec(parse("z[-1,-1]"), parse("eps^l*(N - t)^l + 1"), p, backend, precision),
        )


def polynomial_flow(l: int, eps) -> PolynomialFlow:
    if l < 0 or l % 2:
        raise ValueError("l must be an even natural number to keep the flows positive")
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    return PolynomialFlow(l, eps)
