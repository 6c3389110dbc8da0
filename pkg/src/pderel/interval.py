"""Outward-rounded decimal intervals and exact-or-enclosed real quantities.

Endpoints are Decimals.  Every operation rounds the lower endpoint toward
-inf and the upper toward +inf.  ``ln`` and ``exp`` of the decimal module are
correctly rounded, so widening their result by one unit in the last place
gives a valid enclosure.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import MAX_EMAX, MIN_EMIN, ROUND_CEILING, ROUND_FLOOR, Context, Decimal
from fractions import Fraction
from typing import Union

Number = Union[int, Fraction, Decimal]


def _down(prec: int) -> Context:
    return Context(prec=prec, rounding=ROUND_FLOOR, Emax=MAX_EMAX, Emin=MIN_EMIN)


def _up(prec: int) -> Context:
    return Context(prec=prec, rounding=ROUND_CEILING, Emax=MAX_EMAX, Emin=MIN_EMIN)


def _near(prec: int) -> Context:
    return Context(prec=prec, Emax=MAX_EMAX, Emin=MIN_EMIN)


@dataclass(frozen=True)
class Interval:
    lo: Decimal
    hi: Decimal
    prec: int = 100

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: Number, prec: int = 100) -> Interval:
        if isinstance(x, Decimal):
            return cls(_down(prec).plus(x), _up(prec).plus(x), prec)
        q = Fraction(x)
        n, d = Decimal(q.numerator), Decimal(q.denominator)
        return cls(_down(prec).divide(n, d), _up(prec).divide(n, d), prec)

    @property
    def width(self) -> Decimal:
        return _up(self.prec).subtract(self.hi, self.lo)

    def __add__(self, other: Interval) -> Interval:
        p = min(self.prec, other.prec)
        return Interval(_down(p).add(self.lo, other.lo), _up(p).add(self.hi, other.hi), p)

    def __neg__(self) -> Interval:
        return Interval(self.hi.copy_negate(), self.lo.copy_negate(), self.prec)

    def __sub__(self, other: Interval) -> Interval:
        return self + (-other)

    def __mul__(self, other: Interval) -> Interval:
        p = min(self.prec, other.prec)
        dn, up = _down(p), _up(p)
        pairs = [(a, b) for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        return Interval(min(dn.multiply(a, b) for a, b in pairs), max(up.multiply(a, b) for a, b in pairs), p)

    def __truediv__(self, other: Interval) -> Interval:
        if other.lo <= 0 <= other.hi:
            raise ZeroDivisionError("interval divisor contains zero")
        p = min(self.prec, other.prec)
        dn, up = _down(p), _up(p)
        pairs = [(a, b) for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
        return Interval(min(dn.divide(a, b) for a, b in pairs), max(up.divide(a, b) for a, b in pairs), p)

    def ln(self) -> Interval:
        if self.lo <= 0:
            raise ValueError("logarithm of a nonpositive interval")
        if self.lo == self.hi == 1:
            return Interval(Decimal(0), Decimal(0), self.prec)
        ctx = _near(self.prec)
        lo = self.lo.ln(ctx).next_minus(ctx)
        hi = self.hi.ln(ctx).next_plus(ctx)
        return Interval(lo, hi, self.prec)

    def exp(self) -> Interval:
        ctx = _near(self.prec)
        lo = self.lo.exp(ctx).next_minus(ctx)
        hi = self.hi.exp(ctx).next_plus(ctx)
        return Interval(max(lo, Decimal(0)), hi, self.prec)

    def certainly_lt(self, other: Interval) -> bool:
        return self.hi < other.lo

    def certainly_le(self, other: Interval) -> bool:
        return self.hi <= other.lo

    def contains(self, x: Number) -> bool:
        x = Fraction(x)
        return Fraction(self.lo) <= x <= Fraction(self.hi)

    def midpoint(self) -> Decimal:
        ctx = _near(self.prec)
        return ctx.divide(ctx.add(self.lo, self.hi), 2)


def ln_decimal(x: Number, prec: int = 100) -> Decimal:
    """Correctly rounded natural log of a positive rational or decimal."""
    ctx = _near(prec + 10)
    if isinstance(x, Decimal):
        return _near(prec).plus(x.ln(ctx))
    q = Fraction(x)
    if q <= 0:
        raise ValueError("logarithm of a nonpositive number")
    return _near(prec).plus(ctx.subtract(Decimal(q.numerator).ln(ctx), Decimal(q.denominator).ln(ctx)))


# -- quantities that may be exact ---------------------------------------------

EXACT_BIT_CAP = 4_000_000


class Quantity:
    """A real number known exactly when possible and enclosable at any precision."""

    def exact(self) -> Fraction | None:
        return None

    def enclose(self, prec: int) -> Interval:
        raise NotImplementedError

    def __add__(self, other):
        return Sum(self, as_quantity(other))

    def __mul__(self, other):
        return Product(self, as_quantity(other))

    __rmul__ = __mul__
    __radd__ = __add__

    def __sub__(self, other):
        return Sum(self, Product(Const(Fraction(-1)), as_quantity(other)))

    def __truediv__(self, other):
        return Quotient(self, as_quantity(other))

    def __pow__(self, other):
        return Power(self, as_quantity(other))


def as_quantity(x) -> Quantity:
    if isinstance(x, Quantity):
        return x
    if isinstance(x, Decimal):
        return Const(Fraction(x))
    return Const(Fraction(x))


@dataclass(frozen=True)
class Const(Quantity):
    value: Fraction

    def exact(self):
        return self.value

    def enclose(self, prec):
        return Interval.point(self.value, prec)

    def __repr__(self):
        return str(self.value)


@dataclass(frozen=True)
class Sum(Quantity):
    a: Quantity
    b: Quantity

    def exact(self):
        x, y = self.a.exact(), self.b.exact()
        return None if x is None or y is None else x + y

    def enclose(self, prec):
        return self.a.enclose(prec) + self.b.enclose(prec)


@dataclass(frozen=True)
class Product(Quantity):
    a: Quantity
    b: Quantity

    def exact(self):
        x, y = self.a.exact(), self.b.exact()
        return None if x is None or y is None else x * y

    def enclose(self, prec):
        return self.a.enclose(prec) * self.b.enclose(prec)


@dataclass(frozen=True)
class Quotient(Quantity):
    a: Quantity
    b: Quantity

    def exact(self):
        x, y = self.a.exact(), self.b.exact()
        return None if x is None or y is None or y == 0 else x / y

    def enclose(self, prec):
        return self.a.enclose(prec) / self.b.enclose(prec)


def _bits(q: Fraction) -> int:
    return max(abs(q.numerator).bit_length(), q.denominator.bit_length(), 1)


@dataclass(frozen=True)
class Power(Quantity):
    """base ** exponent for a positive base; exact for moderate integer exponents."""

    base: Quantity
    exponent: Quantity

    def exact(self):
        b, e = self.base.exact(), self.exponent.exact()
        if b is None or e is None:
            return None
        if e.denominator != 1:
            return None
        if b in (0, 1):
            return b ** int(e) if b or e > 0 else None
        if abs(e) * _bits(b) > EXACT_BIT_CAP:
            return None
        return b ** int(e)

    def enclose(self, prec):
        b = self.base.enclose(prec)
        e = self.exponent.enclose(prec)
        return (e * b.ln()).exp()


@dataclass(frozen=True)
class Log(Quantity):
    """Natural logarithm; exact only for the argument 1."""

    arg: Quantity

    def exact(self):
        return Fraction(0) if self.arg.exact() == 1 else None

    def enclose(self, prec):
        return self.arg.enclose(prec).ln()
