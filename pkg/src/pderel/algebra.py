"""Sparse multivariate polynomials and rational functions over Q.

The variables of a polynomial are identified by position; callers keep the
mapping from positions to names (stencil offsets, symbols).
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Callable, Iterable, Iterator, Mapping, Sequence, TypeVar

T = TypeVar("T")

Exponent = tuple[int, ...]


class Polynomial:
    """Polynomial with Fraction coefficients in ``nvars`` ordered variables."""

    __slots__ = ("nvars", "_terms")

    def __init__(self, terms: Mapping[Exponent, Fraction] | None = None, nvars: int = 0):
        self.nvars = nvars
        clean: dict[Exponent, Fraction] = {}
        for exp, coef in (terms or {}).items():
            if len(exp) != nvars:
                raise ValueError(f"exponent {exp} does not have {nvars} entries")
            if coef:
                clean[tuple(exp)] = Fraction(coef)
        self._terms = clean

    @classmethod
    def constant(cls, value, nvars: int) -> Polynomial:
        return cls({(0,) * nvars: Fraction(value)}, nvars)

    @classmethod
    def variable(cls, index: int, nvars: int) -> Polynomial:
        exp = [0] * nvars
        exp[index] = 1
        return cls({tuple(exp): Fraction(1)}, nvars)

    @property
    def terms(self) -> dict[Exponent, Fraction]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[Exponent, Fraction]]:
        """Terms in canonical order: total degree, then exponent tuple."""
        for exp in sorted(self._terms, key=lambda e: (sum(e), e)):
            yield exp, self._terms[exp]

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.nvars == other.nvars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(other, self.nvars)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.nvars, frozenset(self._terms.items())))

    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError("polynomials live in different variable sets")
            return other
        return Polynomial.constant(other, self.nvars)

    def __add__(self, other) -> Polynomial:
        other = self._coerce(other)
        out = dict(self._terms)
        for exp, c in other._terms.items():
            out[exp] = out.get(exp, 0) + c
        return Polynomial(out, self.nvars)

    __radd__ = __add__

    def __neg__(self) -> Polynomial:
        return Polynomial({e: -c for e, c in self._terms.items()}, self.nvars)

    def __sub__(self, other) -> Polynomial:
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> Polynomial:
        return self._coerce(other) - self

    def __mul__(self, other) -> Polynomial:
        other = self._coerce(other)
        out: dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Polynomial(out, self.nvars)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> Polynomial:
        if n < 0:
            raise ValueError("negative power of a polynomial")
        result = Polynomial.constant(1, self.nvars)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * self.nvars, Fraction(0))

    def total_degree(self) -> int:
        return max((sum(e) for e in self._terms), default=-1)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e in self._terms), default=-1)

    def coefficients(self) -> list[Fraction]:
        return [c for _, c in self.items()]

    def scale(self, factor) -> Polynomial:
        factor = Fraction(factor)
        return Polynomial({e: c * factor for e, c in self._terms.items()}, self.nvars)

    def derivative(self, index: int) -> Polynomial:
        out: dict[Exponent, Fraction] = {}
        for e, c in self._terms.items():
            if e[index]:
                ne = list(e)
                ne[index] -= 1
                out[tuple(ne)] = out.get(tuple(ne), 0) + c * e[index]
        return Polynomial(out, self.nvars)

    def evaluate(self, values: Sequence[T], one: T | None = None) -> T:
        """Evaluate at ``values``; works over any ring supporting + * and int powers."""
        total = None
        for exp, coef in self.items():
            term = None
            for v, k in zip(values, exp):
                if k:
                    p = v**k
                    term = p if term is None else term * p
            if term is None:
                term = (one if one is not None else 1) * coef
            else:
                term = term * coef
            total = term if total is None else total + term
        if total is None:
            return (one if one is not None else 1) * Fraction(0)
        return total

    def map_coefficients(self, fn: Callable[[Fraction], Fraction]) -> Polynomial:
        return Polynomial({e: fn(c) for e, c in self._terms.items()}, self.nvars)

    def __repr__(self) -> str:
        return f"Polynomial({dict(self.items())!r}, nvars={self.nvars})"


def content_scale(polys: Iterable[Polynomial]) -> Fraction:
    """Factor that makes all coefficients integral with overall gcd 1."""
    coefs = [c for p in polys for c in p.coefficients()]
    if not coefs:
        return Fraction(1)
    den = lcm(*(c.denominator for c in coefs))
    g = 0
    for c in coefs:
        g = gcd(g, c.numerator * (den // c.denominator))
    return Fraction(den, g)


class RationalFunction:
    """A presentation num/den; no polynomial gcd cancellation is attempted."""

    __slots__ = ("num", "den")

    def __init__(self, num: Polynomial, den: Polynomial | None = None):
        if den is None:
            den = Polynomial.constant(1, num.nvars)
        if not den:
            raise ZeroDivisionError("zero denominator")
        if den.is_constant():
            num, den = num.scale(1 / den.constant_term()), Polynomial.constant(1, num.nvars)
        self.num = num
        self.den = den

    @property
    def nvars(self) -> int:
        return self.num.nvars

    def __add__(self, other: RationalFunction) -> RationalFunction:
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(self.num * other.den + other.num * self.den, self.den * other.den)

    def __neg__(self) -> RationalFunction:
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other: RationalFunction) -> RationalFunction:
        return self + (-other)

    def __mul__(self, other: RationalFunction) -> RationalFunction:
        return RationalFunction(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: RationalFunction) -> RationalFunction:
        if not other.num:
            raise ZeroDivisionError("division by the zero polynomial")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __pow__(self, n: int) -> RationalFunction:
        if n >= 0:
            return RationalFunction(self.num**n, self.den**n)
        if not self.num:
            raise ZeroDivisionError("negative power of zero")
        return RationalFunction(self.den ** (-n), self.num ** (-n))

    def normalized(self) -> RationalFunction:
        """Scale num and den jointly to primitive integer coefficients."""
        k = content_scale([self.num, self.den])
        num, den = self.num.scale(k), self.den.scale(k)
        lead = next(iter(den.items()))[1]
        if lead < 0:
            num, den = -num, -den
        out = RationalFunction.__new__(RationalFunction)
        out.num, out.den = num, den
        return out

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return self.num * other.den == other.num * self.den

    def __hash__(self):
        raise TypeError("RationalFunction is unhashable")

    def __repr__(self) -> str:
        return f"RationalFunction({self.num!r}, {self.den!r})"
