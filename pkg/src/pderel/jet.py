"""Taylor expansion of lattice rules into PDEs.

A cell ``z_{N+i}^{t+j}`` is identified with ``eps^m u(x + i eps^p, s + j eps^q)``
and expanded to order ``alpha``; the order ``alpha+1`` terms are kept as
remainder monomials evaluated at an unknown point tagged by the cell.
Shifts ``(i, j)`` are measured from the expansion point ``(N, t)``, so the
target cell of a rule sits at shift ``(1, 1)`` and a target-relative stencil
offset ``(dn, dt)`` sits at ``(dn + 1, dt + 1)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from math import factorial, gcd, lcm
from typing import Callable, Iterator, Mapping, Sequence

from .algebra import Polynomial, RationalFunction, content_scale
from .dsl import Expression, Offset, parse, to_rational_function
from .maxplus import ElementaryRational, PositivityError, tropical_constants

Shift = tuple[int, int]


class DerivationError(ValueError):
    pass


class InsufficientHypotheses(DerivationError):
    pass


@dataclass(frozen=True, order=True)
class JetVariable:
    """u_{ix,js}; ``point`` is () at (x,s) or the shift tag of a remainder point."""

    x_order: int
    s_order: int
    point: tuple[int, ...] = ()

    @property
    def order(self) -> int:
        return self.x_order + self.s_order

    def name(self, letter: str = "u") -> str:
        def part(k: int, c: str) -> str:
            return "" if k == 0 else (c if k == 1 else f"{k}{c}")

        sub = part(self.x_order, "x") + part(self.s_order, "s")
        base = letter if not sub else (f"{letter}_{sub}" if len(sub) == 1 else f"{letter}_{{{sub}}}")
        if self.point:
            base += "(ξ_{" + ",".join(map(str, self.point)) + "})"
        return base


Factors = tuple[tuple[JetVariable, int], ...]
Key = tuple[int, Factors]  # (eps degree, sorted factors)


def _mul_factors(a: Factors, b: Factors) -> Factors:
    out = dict(a)
    for v, k in b:
        out[v] = out.get(v, 0) + k
    return tuple(sorted(out.items()))


def _sort_key(key: Key):
    eps, factors = key
    order = sum(v.order * k for v, k in factors)
    idx = tuple((v.point, v.x_order, v.s_order, -k) for v, k in factors)
    return (eps, -order, idx)


class JetPolynomial:
    """Polynomial in eps and jet variables with rational coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Key, Fraction] | None = None):
        self._terms = {k: Fraction(c) for k, c in (terms or {}).items() if c}

    @classmethod
    def one(cls) -> JetPolynomial:
        return cls({(0, ()): Fraction(1)})

    @classmethod
    def monomial(cls, coef, eps: int = 0, *variables: JetVariable) -> JetPolynomial:
        f: Factors = ()
        for v in variables:
            f = _mul_factors(f, ((v, 1),))
        return cls({(eps, f): Fraction(coef)})

    def items(self) -> Iterator[tuple[Key, Fraction]]:
        for k in sorted(self._terms, key=_sort_key):
            yield k, self._terms[k]

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if isinstance(other, JetPolynomial):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == JetPolynomial.one().scale(other)
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def _coerce(self, other) -> JetPolynomial:
        return other if isinstance(other, JetPolynomial) else JetPolynomial.one().scale(other)

    def __add__(self, other) -> JetPolynomial:
        other = self._coerce(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0) + c
        return JetPolynomial(out)

    __radd__ = __add__

    def __neg__(self) -> JetPolynomial:
        return self.scale(-1)

    def __sub__(self, other) -> JetPolynomial:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> JetPolynomial:
        return self._coerce(other) - self

    def __mul__(self, other) -> JetPolynomial:
        if not isinstance(other, JetPolynomial):
            return self.scale(other)
        out: dict[Key, Fraction] = {}
        for (e1, f1), c1 in self._terms.items():
            for (e2, f2), c2 in other._terms.items():
                k = (e1 + e2, _mul_factors(f1, f2))
                out[k] = out.get(k, 0) + c1 * c2
        return JetPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> JetPolynomial:
        result = JetPolynomial.one()
        for _ in range(n):
            result = result * self
        return result

    def scale(self, c) -> JetPolynomial:
        c = Fraction(c)
        return JetPolynomial({k: v * c for k, v in self._terms.items()})

    def shift_eps(self, k: int) -> JetPolynomial:
        """Multiply by eps^k (k may be negative if every degree allows it)."""
        if self and self.min_eps_degree() + k < 0:
            raise DerivationError(f"cannot divide by eps^{-k}")
        return JetPolynomial({(e + k, f): c for (e, f), c in self._terms.items()})

    def min_eps_degree(self) -> int:
        return min((e for e, _ in self._terms), default=0)

    def variables(self) -> set[JetVariable]:
        return {v for _, f in self._terms for v, _ in f}

    def max_order(self) -> int:
        return max((v.order for v in self.variables()), default=0)

    def split(self) -> tuple[JetPolynomial, JetPolynomial]:
        """(part free of remainder points, part with remainder points)."""
        main, rem = {}, {}
        for k, c in self._terms.items():
            (rem if any(v.point for v, _ in k[1]) else main)[k] = c
        return JetPolynomial(main), JetPolynomial(rem)

    def eps_constant(self) -> JetPolynomial:
        return JetPolynomial({k: c for k, c in self._terms.items() if k[0] == 0})

    def evaluate(self, jets: Mapping, eps) -> Fraction:
        """Evaluate with ``jets[(i, j)]`` (or ``jets[JetVariable]``) and a value of eps."""
        lift = (lambda q: Decimal(q.numerator) / Decimal(q.denominator)) if isinstance(eps, Decimal) else (lambda q: q)
        total = 0
        for (e, factors), c in self._terms.items():
            term = lift(c) * eps**e
            for v, k in factors:
                value = jets[v] if v in jets else jets[(v.x_order, v.s_order)]
                term = term * value**k
            total = total + term
        return total

    def format(self, letter: str = "u", eps: str = "ε", spaced: bool = True) -> str:
        if not self._terms:
            return "0"
        pieces = []
        for (e, factors), c in self.items():
            body = []
            if e:
                body.append(eps if e == 1 else f"{eps}^{e}")
            for v, k in factors:
                body.append(v.name(letter) + (f"^{k}" if k > 1 else ""))
            mag = abs(c)
            text = "·".join(body)
            if not body:
                text = _frac_text(mag)
            elif mag != 1:
                text = (_frac_text(mag) + text) if mag.denominator == 1 else f"{_frac_text(mag)}·{text}"
            pieces.append(("-" if c < 0 else "+", text))
        sep = (lambda s: f" {s} ") if spaced else (lambda s: s)
        out = ("-" if pieces[0][0] == "-" else "") + pieces[0][1]
        for sign, text in pieces[1:]:
            out += sep(sign) + text
        return out

    def __repr__(self) -> str:
        return f"JetPolynomial({self.format()!r})"


def _frac_text(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def pde_equal_mod_scalar(a: JetPolynomial, b: JetPolynomial) -> bool:
    """True iff a = lambda*b for a nonzero rational lambda (0 ~ 0)."""
    ta, tb = dict(a.items()), dict(b.items())
    if ta.keys() != tb.keys():
        return False
    if not ta:
        return True
    ratios = {ta[k] / tb[k] for k in ta}
    return len(ratios) == 1


_JET_NAME = r"^{letter}(?:_(?:(\d*)x)?(?:(\d*)s)?)?$"


def pde_from_text(text: str, letter: str = "u", eps: str = "eps") -> JetPolynomial:
    """Read a jet polynomial written in the expression language, e.g. ``4*u_s + eps*u*(u_s+u_x)``."""
    expr = parse(text)
    pattern = re.compile(_JET_NAME.format(letter=re.escape(letter)))
    names = sorted(expr.symbols)
    variables: list[JetVariable | None] = []
    for name in names:
        if name == eps:
            variables.append(None)
            continue
        m = pattern.match(name)
        if not m or name.endswith("_"):
            raise DerivationError(f"{name!r} is not a jet variable of {letter!r}")
        gx, gs = m.group(1), m.group(2)
        xo = 0 if gx is None else int(gx or 1)
        so = 0 if gs is None else int(gs or 1)
        variables.append(JetVariable(xo, so))
    rf = to_rational_function(expr, names)
    if not rf.is_polynomial():
        raise DerivationError("jet polynomial text must be polynomial")
    out = JetPolynomial()
    for exp, coef in rf.num.items():
        e = 0
        factors: Factors = ()
        for v, k in zip(variables, exp):
            if not k:
                continue
            if v is None:
                e += k
            else:
                factors = _mul_factors(factors, ((v, k),))
        out = out + JetPolynomial({(e, factors): coef})
    return out


# -- approximation data and cell expansion ------------------------------------


@dataclass(frozen=True)
class ApproximationData:
    """Stencil (target-relative offsets), scaling exponents (m, p, q) and order alpha."""

    stencil: tuple[Offset, ...]
    m: int = 1
    p: int = 1
    q: int = 1
    alpha: int = 1

    def __post_init__(self):
        object.__setattr__(self, "stencil", tuple(tuple(o) for o in self.stencil))
        for dn, dt in self.stencil:
            if not (dt <= -1 or (dt == 0 and dn <= -1)):
                raise ValueError(f"offset {(dn, dt)} is not strictly before the target cell")
        if len(set(self.stencil)) != len(self.stencil):
            raise ValueError("repeated stencil offset")
        if min(self.m, self.p, self.q) < 0 or self.alpha < 0:
            raise ValueError("scaling exponents and order must be natural numbers")

    @property
    def dimension(self) -> int:
        return len(self.stencil)

    def shifts(self) -> tuple[Shift, ...]:
        return tuple((dn + 1, dt + 1) for dn, dt in self.stencil)


@dataclass(frozen=True)
class CellExpansion:
    shift: Shift
    main: JetPolynomial
    remainder: JetPolynomial

    @property
    def full(self) -> JetPolynomial:
        return self.main + self.remainder


def expand_cell(shift: Shift, data: ApproximationData) -> CellExpansion:
    """Truncated Taylor expansion of eps^m u(x + i eps^p, s + j eps^q)."""
    i, j = shift
    main, rem = JetPolynomial(), JetPolynomial()
    for total in range(data.alpha + 2):
        for a in range(total + 1):
            b = total - a
            coef = Fraction(i**a * j**b, factorial(a) * factorial(b))
            if not coef:
                continue
            deg = data.m + data.p * a + data.q * b
            if total <= data.alpha:
                main = main + JetPolynomial.monomial(coef, deg, JetVariable(a, b))
            else:
                rem = rem + JetPolynomial.monomial(coef, deg, JetVariable(a, b, (i, j)))
    return CellExpansion((i, j), main, rem)


# -- derivation ---------------------------------------------------------------


@dataclass(frozen=True)
class RemainderTerm:
    shift: Shift
    variable: JetVariable
    coefficient: Fraction
    eps_degree: int
    cofactor_bound: Fraction | None


@dataclass(frozen=True)
class ClassTuple:
    M: int | None
    c: Fraction | None
    L: int
    k: int
    D: int

    def __iter__(self):
        return iter((self.M, self.c, self.L, self.k, self.D))


@dataclass(frozen=True)
class DerivedPDE:
    data: ApproximationData
    numerator: Polynomial  # k over the stencil variables
    denominator: Polynomial  # h over the stencil variables
    leading: JetPolynomial  # P: numerator of (target - f) divided by eps^m
    reduced: JetPolynomial  # P divided by its lowest power of eps
    reduction: int
    denominator_jets: JetPolynomial  # h at eps^m u, remainder-free part
    remainder: JetPolynomial
    remainder_terms: tuple[RemainderTerm, ...]
    class_tuple: ClassTuple
    error_constant: Fraction | None
    error_note: str = ""
    letter: str = field(default="u", compare=False)

    @property
    def consistent(self) -> bool:
        return self.class_tuple.k <= 1

    def format(self, letter: str | None = None) -> str:
        letter = letter or self.letter
        return f"{self.reduced.format(letter)} over {format_denominator(self.denominator_jets, letter)}"

    def approximation(self, jets: Mapping, eps) -> Fraction:
        """eps^m P / h evaluated on given jets."""
        return eps**self.data.m * self.leading.evaluate(jets, eps) / self.denominator_jets.evaluate(jets, eps)


def format_denominator(h: JetPolynomial, letter: str = "u") -> str:
    coefs = [c for _, c in h.items()]
    if len(coefs) == 1:
        return h.format(letter)
    den = lcm(*(c.denominator for c in coefs))
    g = 0
    for c in coefs:
        g = gcd(g, abs(c.numerator) * (den // c.denominator))
    content = Fraction(g, den)
    inner = h.scale(1 / content).format(letter, spaced=False)
    return inner if content == 1 else f"{_frac_text(content)}({inner})"


def _rule_polynomials(f, data: ApproximationData) -> tuple[Polynomial, Polynomial]:
    if isinstance(f, str):
        f = parse(f)
    if isinstance(f, Expression):
        extra = set(f.stencil) - set(data.stencil)
        if extra:
            raise DerivationError(f"rule uses cells {sorted(extra)} outside the stencil")
        rf = to_rational_function(f, list(data.stencil))
    elif isinstance(f, ElementaryRational):
        rf = RationalFunction(*f.polynomials())
    elif isinstance(f, RationalFunction):
        rf = f
    else:
        raise TypeError(f"unsupported rule type {type(f).__name__}")
    if rf.nvars != data.dimension:
        raise DerivationError(f"rule has {rf.nvars} variables, stencil has {data.dimension}")
    rf = rf.normalized()
    return rf.num, rf.den


def _extend(p: Polynomial, n: int) -> Polynomial:
    return Polynomial({e + (0,) * (n - p.nvars): c for e, c in p.items()}, n)


def class_tuple(data: ApproximationData, k_poly: Polynomial, h_poly: Polynomial) -> ClassTuple:
    shifts = data.shifts()
    left = max([0] + [-i for i, _ in shifts])
    right = max([0] + [i for i, j in shifts if j <= 0])
    depth = max([0] + [1 - j for _, j in shifts]) - 1
    try:
        consts = tropical_constants(ElementaryRational.from_polynomials(k_poly, h_poly))
        M, c = consts.M, consts.c
    except (PositivityError, ValueError):
        M, c = None, None
    return ClassTuple(M, c, max(left, depth), right, max(data.p, data.q))


def derive_pde(f, data: ApproximationData, letter: str = "u", eps_max: Fraction = Fraction(1)) -> DerivedPDE:
    """Expand ``target - f(cells)`` over the common denominator of f.

    ``f`` is an Expression (cell references matching the stencil), an
    ElementaryRational or a RationalFunction over the stencil variables.
    """
    k_poly, h_poly = _rule_polynomials(f, data)
    n = data.dimension
    if h_poly.constant_term() == 0:
        raise DerivationError("the denominator vanishes at eps = 0; series division is undefined")
    expansions = [expand_cell(s, data) for s in data.shifts()]
    target = expand_cell((1, 1), data)
    N = Polynomial.variable(n, n + 1) * _extend(h_poly, n + 1) - _extend(k_poly, n + 1)
    full = N.evaluate([e.full for e in expansions] + [target.full], one=JetPolynomial.one())
    leading_raw, remainder = full.split()
    if leading_raw and leading_raw.min_eps_degree() < data.m:
        raise DerivationError(f"the expansion has eps-degree below m={data.m}; the rule is not consistent with u")
    leading = leading_raw.shift_eps(-data.m)
    v = leading.min_eps_degree() if leading else 0
    reduced = leading.shift_eps(-v)
    h_jets = h_poly.evaluate([e.main for e in expansions], one=JetPolynomial.one())
    for term_key, _ in leading.items():
        if any(var.order > data.alpha for var, _ in term_key[1]):
            raise AssertionError("leading term beyond the expansion order")
    try:
        terms = _remainder_terms(N, expansions + [target], h_poly, n, data)
        note = ""
    except InsufficientHypotheses as exc:
        terms = tuple(
            RemainderTerm(e.shift, var, c, deg, None)
            for e in expansions + [target]
            for (deg, ((var, _),)), c in e.remainder.items()
        )
        note = str(exc)
    derived = DerivedPDE(
        data, k_poly, h_poly, leading, reduced, v, h_jets.split()[0], remainder, terms,
        class_tuple(data, k_poly, h_poly), None, note, letter,
    )
    if note:
        return derived
    try:
        constant = error_constant(derived, eps_max=eps_max)
    except InsufficientHypotheses as exc:
        return _replace(derived, error_note=str(exc))
    return _replace(derived, error_constant=constant)


def _replace(d: DerivedPDE, **changes) -> DerivedPDE:
    from dataclasses import replace

    return replace(d, **changes)


def _remainder_terms(N: Polynomial, expansions: Sequence[CellExpansion], h: Polynomial, n: int, data: ApproximationData):
    """Bound each cell's cofactor G_c / h by matching its monomials against h."""
    inexact = [idx for idx, e in enumerate(expansions) if e.remainder]
    for exp, _ in N.items():
        hits = [idx for idx in inexact if exp[idx]]
        if len(hits) > 1 or any(exp[idx] > 1 for idx in hits):
            raise InsufficientHypotheses(f"monomial {exp} is not linear in a single remainder cell")
    h_ext = dict(_extend(h, n + 1).items())
    if any(c <= 0 for c in h_ext.values()):
        raise InsufficientHypotheses("denominator has a nonpositive coefficient")
    terms = []
    for idx in inexact:
        G = N.derivative(idx)
        ratio = Fraction(0)
        for exp, g in G.items():
            if exp not in h_ext:
                raise InsufficientHypotheses(
                    f"cofactor monomial {exp} of the cell at shift {expansions[idx].shift} has no match in the denominator"
                )
            ratio = max(ratio, abs(g) / h_ext[exp])
        for (deg, ((var, _),)), c in expansions[idx].remainder.items():
            terms.append(RemainderTerm(expansions[idx].shift, var, c, deg, ratio))
    return tuple(terms)


def error_constant(d: DerivedPDE, eps_max: Fraction = Fraction(1), jet_positivity: bool = True) -> Fraction:
    """Certified C with |F^1| <= C ||u||_{alpha+1}, F^1 the remainder after eps^(m+v).

    Each cell contributes (bound on |G_c/h|) * sum |coef| * eps_max^(surplus).
    """
    eps_max = Fraction(eps_max)
    if not 0 < eps_max <= 1:
        raise ValueError("eps_max must lie in (0, 1]")
    if not jet_positivity:
        raise InsufficientHypotheses("cofactor ratios need positive cell values")
    scale = d.data.m + d.reduction
    total = Fraction(0)
    for term in d.remainder_terms:
        if term.cofactor_bound is None:
            raise InsufficientHypotheses(d.error_note or f"no cofactor bound for {term.variable.name()}")
        surplus = term.eps_degree - scale
        if surplus < 0:
            raise InsufficientHypotheses(f"remainder {term.variable.name()} has eps-degree below {scale}")
        total += term.cofactor_bound * abs(term.coefficient) * eps_max**surplus
    return total


# -- numeric helpers for consistency checks -----------------------------------


def polynomial_jets(u: Polynomial, point: Sequence[Fraction], order: int) -> dict[tuple[int, int], Fraction]:
    """All partial derivatives u_{ix,js} with i+j <= order of a polynomial in (x, s)."""
    jets = {}
    for i in range(order + 1):
        dx = u
        for _ in range(i):
            dx = dx.derivative(0)
        for j in range(order + 1 - i):
            dxs = dx
            for _ in range(j):
                dxs = dxs.derivative(1)
            jets[(i, j)] = dxs.evaluate(list(point))
    return jets


def discrete_defect(
    rule: Expression, data: ApproximationData, u: Callable[[Fraction, Fraction], Fraction], point, eps: Fraction
) -> Fraction:
    """target - f(cells) with every cell replaced by eps^m u at the scaled lattice point."""
    from .dsl import evaluate

    x, s = map(Fraction, point)

    def cell(i: int, j: int) -> Fraction:
        return eps**data.m * u(x + i * eps**data.p, s + j * eps**data.q)

    value = evaluate(rule, {}, lambda off: cell(off[0] + 1, off[1] + 1))
    return cell(1, 1) - value
