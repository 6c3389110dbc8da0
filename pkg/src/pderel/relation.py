"""Initial rates, Q statistics, asymptotic bound formulas and certificates.

Two flows z, w on a lattice are compared through the two-sided ratio
``max(z/w, w/z)``.  The discrete initial rate over a band of width L is the
largest such ratio on rows ``0..L`` up to column N0 and on columns ``0..L``
up to row t0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Context, Decimal
from fractions import Fraction
from math import lcm
from typing import Sequence

from .dynamics import GridFlow
from .interval import Const, Interval, Power, Quantity, _bits, ln_decimal

DEFAULT_PRECISION = 100
PRECISION_CAP = 1600
EXACT_BIT_CAP = 2_000_000


class CertificationError(ArithmeticError):
    pass


class MissingCellError(KeyError):
    pass


@dataclass(frozen=True)
class RelationClass:
    M: Fraction
    c: Fraction = Fraction(1)
    D: Fraction = Fraction(1)
    L: int = 1
    alpha: int = 1
    flavor: str = "e"  # "e" or "ee"
    domain: str = "fin"  # "fin" or "inf"

    def __post_init__(self):
        for name in ("M", "c", "D"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.M < 1 or self.c < 1 or self.D < 1:
            raise ValueError("M, c and D must be at least 1")
        if self.L < 0 or self.alpha < 0:
            raise ValueError("L and alpha must be natural numbers")
        if self.flavor not in ("e", "ee"):
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if self.domain not in ("fin", "inf"):
            raise ValueError(f"unknown domain kind {self.domain!r}")

    @property
    def effective_c(self) -> Fraction:
        return Fraction(1) if self.flavor == "e" else self.c


def _q(v) -> Fraction:
    return Fraction(v)


def two_sided_ratio(a, b) -> Fraction:
    r = _q(a) / _q(b)
    return r if r >= 1 else 1 / r


@dataclass(frozen=True)
class RateReport:
    value: Fraction
    band: int
    window: tuple[int, int]
    argmax: tuple[int, int]

    def log(self, prec: int = DEFAULT_PRECISION) -> Decimal:
        return ln_decimal(self.value, prec)


class BandRates:
    """Prefix maxima of the two-sided ratio along the rows and columns of the band."""

    def __init__(self, z: GridFlow, w: GridFlow, L: int):
        self.z, self.w, self.L = z, w, L
        self._ratio: dict[tuple[int, int], Fraction] = {}
        self._rows: dict[int, list[tuple[Fraction, tuple[int, int]]]] = {}
        self._cols: dict[int, list[tuple[Fraction, tuple[int, int]]]] = {}

    def ratio(self, N: int, t: int) -> Fraction:
        key = (N, t)
        if key not in self._ratio:
            a, b = self.z.get(N, t), self.w.get(N, t)
            if a is None or b is None:
                raise MissingCellError(f"cell (N={N}, t={t}) is missing from a flow")
            self._ratio[key] = two_sided_ratio(a, b)
        return self._ratio[key]

    def _prefix(self, store, a: int, upto: int, cell):
        pref = store.setdefault(a, [])
        while len(pref) <= upto:
            i = len(pref)
            here = (self.ratio(*cell(i)), cell(i))
            pref.append(here if not pref or here[0] > pref[-1][0] else pref[-1])
        return pref[upto]

    def rate(self, N0: int, t0: int) -> RateReport:
        best = (Fraction(1), (0, 0))
        for a in range(self.L + 1):
            for cand in (
                self._prefix(self._rows, a, N0, lambda n, a=a: (n, a)),
                self._prefix(self._cols, a, t0, lambda s, a=a: (a, s)),
            ):
                if cand[0] > best[0]:
                    best = cand
        return RateReport(best[0], self.L, (N0, t0), best[1])


def initial_rate_discrete(z: GridFlow, w: GridFlow, L: int, N0: int, t0: int) -> RateReport:
    return BandRates(z, w, L).rate(N0, t0)


# -- Q statistics --------------------------------------------------------------


@dataclass(frozen=True)
class QParams:
    L: int
    eps: Fraction
    c: Fraction = Fraction(2)
    D: Fraction = Fraction(1)
    k: Fraction = Fraction(2)
    offset: Fraction = Fraction(3)
    precision: int = DEFAULT_PRECISION


def double_exponent(params: QParams, N: int, t: int) -> Quantity:
    """c^(eps^-D (x + k s) + offset) at x = N eps, s = t eps."""
    eps = Const(Fraction(params.eps))
    x, s = Fraction(N) * params.eps, Fraction(t) * params.eps
    scale = Power(eps, Const(-Fraction(params.D)))
    return Power(Const(Fraction(params.c)), scale * (x + params.k * s) + params.offset)


def _value(q: Quantity, prec: int) -> Decimal:
    exact = q.exact()
    if exact is not None:
        return Context(prec=prec).divide(Decimal(exact.numerator), Decimal(exact.denominator))
    return q.enclose(prec + 10).midpoint()


@dataclass(frozen=True)
class QEntry:
    value: Decimal
    log_ratio: Decimal
    log_rate: Decimal
    weight: Decimal  # multiplier of log rate (1 for flavor e)


def q_entry(rates: BandRates, point: tuple[int, int], flavor: str, params: QParams) -> QEntry:
    N, t = point
    prec = params.precision
    lr = ln_decimal(rates.ratio(N, t), prec)
    rate = rates.rate(N, t)
    lrate = rate.log(prec)
    if flavor == "e":
        weight = Decimal(1)
    elif flavor == "ee":
        weight = _value(double_exponent(params, N, t), prec)
    else:
        raise ValueError(f"unknown flavor {flavor!r}")
    ctx = Context(prec=prec)
    q = ctx.subtract(lr, ctx.multiply(weight, lrate))
    return QEntry(max(Decimal(0), q), lr, lrate, weight)


def q_value(z: GridFlow, w: GridFlow, point: tuple[int, int], flavor: str, params: QParams) -> Decimal:
    return q_entry(BandRates(z, w, params.L), point, flavor, params).value


@dataclass(frozen=True)
class QTable:
    entries: tuple[tuple[QEntry, ...], ...]  # entries[N][t]
    flavor: str
    params: QParams

    @property
    def values(self) -> list[list[Decimal]]:
        return [[e.value for e in row] for row in self.entries]

    def rounded_components(self, digits: int = 4) -> list[list[Decimal]]:
        """Q from logs first rounded to ``digits`` significant digits, as a 4-digit table would be made."""
        ctx = Context(prec=digits)
        out = []
        for row in self.entries:
            out.append([max(Decimal(0), ctx.plus(e.log_ratio) - ctx.multiply(e.weight, ctx.plus(e.log_rate))) for e in row])
        return out

    def render(self, style: str = "sig4", mode: str = "direct") -> list[list[str]]:
        values = self.rounded_components(4) if mode == "components" else self.values
        return [[render_q(v, style) for v in row] for row in values]

    def markdown(self, style: str = "sig4", mode: str = "direct") -> str:
        cells = self.render(style, mode)
        ncols = len(cells[0]) if cells else 0
        head = ["N\\t"] + [str(t) for t in range(ncols)]
        rows = [[str(N)] + row for N, row in enumerate(cells)]
        widths = [max(len(r[i]) for r in [head] + rows) for i in range(ncols + 1)]
        fmt = lambda r: "| " + " | ".join(c.rjust(wd) for c, wd in zip(r, widths)) + " |"
        sep = "|" + "|".join("-" * (wd + 1) + ":" for wd in widths) + "|"
        return "\n".join([fmt(head), sep] + [fmt(r) for r in rows]) + "\n"

    def csv_rows(self) -> list[list[str]]:
        out = [["N", "t", "Q", "log_ratio", "log_rate", "weight"]]
        for N, row in enumerate(self.entries):
            for t, e in enumerate(row):
                out.append([str(N), str(t), str(e.value), str(e.log_ratio), str(e.log_rate), str(e.weight)])
        return out


def q_table(z: GridFlow, w: GridFlow, window: tuple[int, int], flavor: str, params: QParams) -> QTable:
    rates = BandRates(z, w, params.L)
    n_max, t_max = window
    entries = tuple(tuple(q_entry(rates, (N, t), flavor, params) for t in range(t_max + 1)) for N in range(n_max + 1))
    return QTable(entries, flavor, params)


def render_q(v: Decimal, style: str = "sig4") -> str:
    """Zeros print as 0.0; sig4 keeps 4 significant digits, dec3 three decimals."""
    if v == 0:
        return "0.0"
    if style == "dec3":
        return f"{v.quantize(Decimal('0.001')):f}"
    if style != "sig4":
        raise ValueError(f"unknown style {style!r}")
    r = Context(prec=4).plus(v)
    decimals = max(0, 3 - r.adjusted())
    return f"{r.quantize(Decimal(1).scaleb(-decimals)):f}"


# -- bound formulas ------------------------------------------------------------

FORMS = ("pointwise", "propagated", "doubling")


@dataclass(frozen=True)
class BoundExtras:
    k: Fraction = Fraction(1)
    n: Fraction = Fraction(1)
    C: Fraction | None = None
    C_prime: Fraction | None = None


def bound_terms(
    cls: RelationClass, x: Fraction, s: Fraction, rate: Quantity | Fraction, form: str, eps: Fraction,
    extras: BoundExtras = BoundExtras(),
) -> list[tuple[Quantity, Quantity]]:
    """The right-hand side of an asymptotic estimate as a product of powers base^exponent.

    pointwise   M^E rate (flavor e) or (M rate)^(c^E) (flavor ee), E = eps^-D (x + s + 1)
    propagated  growth accumulated along k-step propagation, with constants 2M and c
    doubling    40^(2^(e+4)) rate^(2^(e+3)), e = (x + 2s)/eps, for 0 < eps <= 1/3
    """
    eps, x, s = Fraction(eps), Fraction(x), Fraction(s)
    rate_q = rate if isinstance(rate, Quantity) else Const(Fraction(rate))
    if form == "doubling":
        if not 0 < eps <= Fraction(1, 3):
            raise ValueError("this estimate needs 0 < eps <= 1/3")
        e = (x + 2 * s) / eps
        return [(Const(Fraction(40)), Power(Const(Fraction(2)), Const(e + 4))), (rate_q, Power(Const(Fraction(2)), Const(e + 3)))]
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    scale = Power(Const(eps), Const(-cls.D))
    M, c = Const(cls.M), Const(cls.effective_c)
    if form == "pointwise":
        E = scale * (x + s + 1)
        if cls.flavor == "e":
            return [(M, E), (rate_q, Const(Fraction(1)))]
        X = Power(c, E)
        return [(M, X), (rate_q, X)]
    if form == "propagated":
        E = scale * (x + extras.k * s)
        two_m = Const(2 * cls.M)
        if cls.effective_c == 1:
            return [(two_m, Const(Fraction(8)) * (E + 1)), (rate_q, Const(Fraction(1)))]
        cm1 = cls.effective_c - 1
        grow = (Power(c, E + 1) - 1) * Const(8 / cm1)
        return [(two_m, grow), (rate_q, Power(c, E + extras.n))]
    raise ValueError(f"unknown bound form {form!r}")


def log_of_terms(terms: Sequence[tuple[Quantity, Quantity]], prec: int) -> Interval:
    total = Interval.point(0, prec)
    for base, exponent in terms:
        total = total + exponent.enclose(prec) * base.enclose(prec).ln()
    return total


def bound_value(
    cls: RelationClass, x, s, rate, form: str, eps, extras: BoundExtras = BoundExtras(), prec: int = DEFAULT_PRECISION
) -> Decimal:
    """Natural log of the bound, evaluated at ``prec`` digits."""
    return log_of_terms(bound_terms(cls, x, s, rate, form, eps, extras), prec + 10).midpoint()


def propagation_constants(M, c, k) -> tuple[Fraction, Fraction]:
    """((2M)^(8/(c-1)), c^k) for c > 1 and ((2M)^(8k), 1) for c = 1."""
    M, c, k = Fraction(M), Fraction(c), Fraction(k)
    if M < 1 or c < 1:
        raise ValueError("M and c must be at least 1")
    if k.denominator != 1:
        raise ValueError("k must be an integer")
    if c == 1:
        return (2 * M) ** (8 * int(k)), Fraction(1)
    e = 8 / (c - 1)
    if e.denominator != 1:
        raise ValueError("(2M)^(8/(c-1)) is irrational for this c")
    return (2 * M) ** int(e), c ** int(k)


# -- certificates ---------------------------------------------------------------


@dataclass(frozen=True)
class BoundCertificate:
    point: tuple[int, int]
    lhs: Fraction
    rhs_terms: tuple[tuple[str, str], ...]  # (base, exponent) as exact text or decimal enclosures
    verdict: str  # "violated" or "satisfied"
    method: str  # "exact-rational-power" or "directed-rounding"
    precision: int | None
    log_lhs: tuple[str, str] | None
    log_rhs: tuple[str, str] | None
    parameters: dict = field(default_factory=dict, compare=False)
    rate: RateReport | None = None

    def text(self) -> str:
        lines = [
            f"point N={self.point[0]} t={self.point[1]}",
            f"verdict {self.verdict}",
            f"method {self.method}" + (f" precision={self.precision}" if self.precision else ""),
        ]
        for k in sorted(self.parameters):
            lines.append(f"param {k}={self.parameters[k]}")
        if self.rate is not None:
            lines.append(f"rate {self.rate.value} argmax={self.rate.argmax}")
        lines.append(f"lhs {self.lhs}")
        for base, exp in self.rhs_terms:
            lines.append(f"rhs-factor ({base})^({exp})")
        if self.log_lhs:
            lines.append(f"log-lhs [{self.log_lhs[0]}, {self.log_lhs[1]}]")
            lines.append(f"log-rhs [{self.log_rhs[0]}, {self.log_rhs[1]}]")
        return "\n".join(lines) + "\n"


def compare_exact(lhs: Fraction, terms: Sequence[tuple[Fraction, Fraction]], bit_cap: int = EXACT_BIT_CAP) -> str | None:
    """'violated' if lhs > prod b^e, else 'satisfied'; None if too large to decide exactly."""
    q = lcm(*(e.denominator for _, e in terms)) if terms else 1
    cost = q * _bits(lhs) + sum(abs(e * q) * _bits(b) for b, e in terms)
    if cost > bit_cap:
        return None
    left = lhs**q
    right = Fraction(1)
    for b, e in terms:
        right *= b ** int(e * q)
    return "violated" if left > right else "satisfied"


def compare_enclosed(
    lhs: Fraction, terms: Sequence[tuple[Quantity, Quantity]], prec: int = DEFAULT_PRECISION, cap: int = PRECISION_CAP
) -> tuple[str, int, Interval, Interval]:
    """Log-domain comparison with outward rounding; doubles precision on overlap."""
    p = prec
    while p <= cap:
        left = Interval.point(lhs, p).ln()
        right = log_of_terms(terms, p)
        if left.lo > right.hi:
            return "violated", p, left, right
        if left.hi <= right.lo:
            return "satisfied", p, left, right
        p *= 2
    raise CertificationError(f"no separation up to {cap} digits")


def certify_terms(
    lhs: Fraction, terms: Sequence[tuple[Quantity, Quantity]], method: str = "auto", prec: int = DEFAULT_PRECISION,
    cap: int = PRECISION_CAP,
):
    exact_terms = [(b.exact(), e.exact()) for b, e in terms]
    eligible = all(b is not None and e is not None for b, e in exact_terms)
    if method in ("auto", "exact") and eligible:
        verdict = compare_exact(lhs, exact_terms)
        if verdict is not None:
            shown = tuple((str(b), str(e)) for b, e in exact_terms)
            return verdict, "exact-rational-power", None, shown, None, None
    if method == "exact":
        raise CertificationError("the bound is not exactly representable within the size cap")
    verdict, p, left, right = compare_enclosed(lhs, terms, prec, cap)
    shown = []
    for b, e in terms:
        be, ee = b.exact(), e.exact()
        shown.append((str(be) if be is not None else _iv(b.enclose(p)), str(ee) if ee is not None else _iv(e.enclose(p))))
    return verdict, "directed-rounding", p, tuple(shown), (str(left.lo), str(left.hi)), (str(right.lo), str(right.hi))


def _iv(iv: Interval) -> str:
    return f"[{iv.lo}, {iv.hi}]"


def certify_point(
    z: GridFlow, w: GridFlow, point: tuple[int, int], cls: RelationClass, form: str, eps,
    extras: BoundExtras = BoundExtras(), method: str = "auto", prec: int = DEFAULT_PRECISION, cap: int = PRECISION_CAP,
) -> BoundCertificate:
    """Decide whether the two-sided ratio at ``point`` exceeds the bound."""
    N, t = point
    eps = Fraction(eps)
    rates = BandRates(z, w, cls.L)
    lhs = rates.ratio(N, t)
    rate = rates.rate(N, t)
    terms = bound_terms(cls, N * eps, t * eps, rate.value, form, eps, extras)
    verdict, how, p, shown, ll, lr = certify_terms(lhs, terms, method, prec, cap)
    params = {
        "M": cls.M, "c": cls.c, "D": cls.D, "L": cls.L, "alpha": cls.alpha, "flavor": cls.flavor,
        "domain": cls.domain, "form": form, "eps": eps,
    }
    if form == "propagated":
        params.update(k=extras.k, n=extras.n)
    return BoundCertificate(point, lhs, shown, verdict, how, p, ll, lr, params, rate)
