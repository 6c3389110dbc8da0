"""Relative (max,+) functions, elementary rational maps and tropical equivalence.

An elementary rational map is a ratio of sums of positive monomials
``r * t^alpha * z^a``.  Its tropical shadow replaces every monomial by the
affine form ``alpha + a.x`` and sums by maxima; multipliers are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .algebra import Polynomial, RationalFunction
from .dsl import Binding, Expression, Offset, to_rational_function
from .lp import solve_lp


class DimensionError(ValueError):
    pass


class PositivityError(ValueError):
    pass


@dataclass(frozen=True)
class AffineTerm:
    constant: Fraction
    gradient: tuple[int, ...]
    multiplier: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "constant", Fraction(self.constant))
        object.__setattr__(self, "gradient", tuple(int(g) for g in self.gradient))
        object.__setattr__(self, "multiplier", Fraction(self.multiplier))
        if self.multiplier <= 0:
            raise PositivityError(f"multiplier must be positive, got {self.multiplier}")

    @property
    def dimension(self) -> int:
        return len(self.gradient)

    def value(self, x: Sequence[Fraction]) -> Fraction:
        return self.constant + sum((g * xi for g, xi in zip(self.gradient, x)), Fraction(0))

    def __add__(self, other: AffineTerm) -> AffineTerm:
        """Tropical product: constants and gradients add, multipliers multiply."""
        _check_dims(self.dimension, other.dimension)
        return AffineTerm(
            self.constant + other.constant,
            tuple(a + b for a, b in zip(self.gradient, other.gradient)),
            self.multiplier * other.multiplier,
        )

    def shape(self) -> tuple[Fraction, tuple[int, ...]]:
        return (self.constant, self.gradient)


def _check_dims(a: int, b: int) -> None:
    if a != b:
        raise DimensionError(f"dimension mismatch: {a} vs {b}")


@dataclass(frozen=True)
class MaxPlusPresentation:
    """max(positive) - max(negative) over R^n."""

    positive: tuple[AffineTerm, ...]
    negative: tuple[AffineTerm, ...]
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "positive", tuple(self.positive))
        object.__setattr__(self, "negative", tuple(self.negative))
        if not self.positive or not self.negative:
            raise ValueError("both parts of a (max,+) presentation must be nonempty")
        for term in self.positive + self.negative:
            _check_dims(term.dimension, self.dimension)

    def evaluate(self, x: Sequence[Fraction]) -> Fraction:
        return max(t.value(x) for t in self.positive) - max(t.value(x) for t in self.negative)

    @property
    def size(self) -> int:
        return len(self.positive) * len(self.negative)


@dataclass(frozen=True)
class ElementaryRational:
    """Sum of positive monomials over sum of positive monomials."""

    numerator: tuple[AffineTerm, ...]
    denominator: tuple[AffineTerm, ...]
    dimension: int

    def __post_init__(self):
        object.__setattr__(self, "numerator", tuple(self.numerator))
        object.__setattr__(self, "denominator", tuple(self.denominator))
        if not self.numerator or not self.denominator:
            raise ValueError("numerator and denominator must be nonempty")
        for term in self.numerator + self.denominator:
            _check_dims(term.dimension, self.dimension)

    @classmethod
    def from_polynomials(
        cls, num: Polynomial, den: Polynomial | None = None, t_index: int | None = None
    ) -> ElementaryRational:
        """Build from polynomials with positive coefficients.

        When ``t_index`` is given, that variable plays the role of the
        parameter t and its exponent becomes the affine constant.
        """
        if den is None:
            den = Polynomial.constant(1, num.nvars)
        n = num.nvars - (1 if t_index is not None else 0)
        return cls(_terms_of(num, t_index), _terms_of(den, t_index), n)

    @classmethod
    def from_rational_function(cls, rf: RationalFunction, t_index: int | None = None) -> ElementaryRational:
        return cls.from_polynomials(rf.num, rf.den, t_index)

    @classmethod
    def from_expression(
        cls,
        expr: Expression,
        variables: Sequence[Offset | str] | None = None,
        binding: Binding | None = None,
    ) -> ElementaryRational:
        """Expand a rule expression over a common denominator.

        Variables default to the expression's stencil in canonical order.
        """
        variables = list(variables if variables is not None else expr.stencil)
        return cls.from_rational_function(to_rational_function(expr, variables, binding))

    def polynomials(self) -> tuple[Polynomial, Polynomial]:
        """Numerator and denominator as polynomials (requires natural gradients and zero constants)."""
        return _poly_of(self.numerator, self.dimension), _poly_of(self.denominator, self.dimension)

    def evaluate(self, z: Sequence[Fraction], t: Fraction = Fraction(1)) -> Fraction:
        def total(terms):
            out = Fraction(0)
            for term in terms:
                v = term.multiplier * Fraction(t) ** term.constant if term.constant.denominator == 1 else None
                if v is None:
                    raise ValueError("non-integer t exponent cannot be evaluated exactly")
                for zi, g in zip(z, term.gradient):
                    v *= Fraction(zi) ** g
                out += v
            return out

        return total(self.numerator) / total(self.denominator)

    def __mul__(self, other: ElementaryRational) -> ElementaryRational:
        """Formal product: every pair of terms multiplies."""
        _check_dims(self.dimension, other.dimension)
        return ElementaryRational(
            tuple(a + b for a in self.numerator for b in other.numerator),
            tuple(a + b for a in self.denominator for b in other.denominator),
            self.dimension,
        )


def _terms_of(p: Polynomial, t_index: int | None) -> tuple[AffineTerm, ...]:
    out = []
    for exp, coef in p.items():
        if coef <= 0:
            raise PositivityError(f"coefficient {coef} of monomial {exp} is not positive")
        if t_index is None:
            out.append(AffineTerm(Fraction(0), exp, coef))
        else:
            rest = exp[:t_index] + exp[t_index + 1 :]
            out.append(AffineTerm(Fraction(exp[t_index]), rest, coef))
    return tuple(out)


def _poly_of(terms: Iterable[AffineTerm], n: int) -> Polynomial:
    out: dict[tuple[int, ...], Fraction] = {}
    for term in terms:
        if term.constant != 0 or any(g < 0 for g in term.gradient):
            raise ValueError("term has a t-exponent or a negative exponent")
        out[term.gradient] = out.get(term.gradient, 0) + term.multiplier
    return Polynomial(out, n)


def tropical_shadow(f: ElementaryRational) -> MaxPlusPresentation:
    strip = lambda terms: tuple(AffineTerm(t.constant, t.gradient) for t in terms)
    return MaxPlusPresentation(strip(f.numerator), strip(f.denominator), f.dimension)


def detropicalize(phi: MaxPlusPresentation) -> ElementaryRational:
    """Inverse direction of the shadow, with every multiplier equal to 1."""
    return ElementaryRational(phi.positive, phi.negative, phi.dimension)


# -- dominance ----------------------------------------------------------------


def term_dominated(term: AffineTerm, envelope: Sequence[AffineTerm]) -> bool:
    """True iff term(x) <= max_j envelope_j(x) for every real x.

    Decided through the concave-hull characterisation: the term is dominated
    iff (gradient, constant) lies below the convex hull of the envelope's
    (gradient, constant) points.
    """
    if not envelope:
        return False
    n = term.dimension
    for e in envelope:
        _check_dims(e.dimension, n)
    m = len(envelope)
    A_eq = [[Fraction(1)] * m] + [[Fraction(e.gradient[k]) for e in envelope] for k in range(n)]
    b_eq = [Fraction(1)] + [Fraction(g) for g in term.gradient]
    A_ub = [[-e.constant for e in envelope]]
    b_ub = [-term.constant]
    return solve_lp([0] * m, A_ub, b_ub, A_eq, b_eq).feasible


def dominance_witness(term: AffineTerm, envelope: Sequence[AffineTerm]) -> tuple[Fraction, ...] | None:
    """A rational point where ``term`` strictly exceeds the envelope, or None.

    Solved from the primal side (maximise the margin), independently of the
    hull test in :func:`term_dominated`.
    """
    n = term.dimension
    for e in envelope:
        _check_dims(e.dimension, n)
    if not envelope:
        return tuple(Fraction(0) for _ in range(n))
    # variables x_1..x_n, s; constraint (b_j - a).x + s <= alpha - beta_j, s <= 1
    A_ub = [[Fraction(b - a) for b, a in zip(e.gradient, term.gradient)] + [Fraction(1)] for e in envelope]
    b_ub = [term.constant - e.constant for e in envelope]
    A_ub.append([Fraction(0)] * n + [Fraction(1)])
    b_ub.append(Fraction(1))
    res = solve_lp([0] * n + [1], A_ub, b_ub, free=True)
    if res.status != "optimal" or res.objective <= 0:
        return None
    return res.x[:n]


def envelope_leq(a: Sequence[AffineTerm], b: Sequence[AffineTerm]) -> bool:
    return all(term_dominated(t, b) for t in a)


def envelope_equal(a: Sequence[AffineTerm], b: Sequence[AffineTerm]) -> bool:
    return envelope_leq(a, b) and envelope_leq(b, a)


def pairwise_sum(a: Sequence[AffineTerm], b: Sequence[AffineTerm]) -> tuple[AffineTerm, ...]:
    return tuple(AffineTerm(s.constant, s.gradient) for s in (x + y for x in a for y in b))


def presentations_equal(phi: MaxPlusPresentation, psi: MaxPlusPresentation) -> bool:
    """max A - max B == max C - max D  iff  max(A+D) == max(B+C)."""
    _check_dims(phi.dimension, psi.dimension)
    return envelope_equal(pairwise_sum(phi.positive, psi.negative), pairwise_sum(phi.negative, psi.positive))


def equivalent(f: ElementaryRational, g: ElementaryRational) -> bool:
    return presentations_equal(tropical_shadow(f), tropical_shadow(g))


# -- constants ----------------------------------------------------------------


@dataclass(frozen=True)
class ActivePair:
    numerator_index: int
    denominator_index: int
    norm: int
    interior_point: tuple[Fraction, ...]
    margin: Fraction


@dataclass(frozen=True)
class TropicalConstants:
    M: int
    c: Fraction
    pairs: tuple[ActivePair, ...]
    maximiser: ActivePair | None

    def __iter__(self):
        return iter((self.M, self.c))


def _region_rows(terms: Sequence[AffineTerm], i: int, n: int):
    """Rows for 'term i beats every distinct other term by margin t'."""
    rows, rhs = [], []
    me = terms[i]
    for k, other in enumerate(terms):
        if k == i or other.shape() == me.shape():
            continue
        # (a_k - a_i).x + t <= alpha_i - alpha_k
        rows.append([Fraction(ak - ai) for ak, ai in zip(other.gradient, me.gradient)] + [Fraction(1)])
        rhs.append(me.constant - other.constant)
    return rows, rhs


def _active(num: Sequence[AffineTerm], den: Sequence[AffineTerm], i: int, j: int, n: int):
    r1, b1 = _region_rows(num, i, n)
    r2, b2 = _region_rows(den, j, n)
    rows = r1 + r2 + [[Fraction(0)] * n + [Fraction(1)]]
    rhs = b1 + b2 + [Fraction(1)]
    res = solve_lp([0] * n + [1], rows, rhs, free=True)
    if res.status == "optimal" and res.objective > 0:
        return res.x[:n], res.objective
    return None


def tropical_constants(f: ElementaryRational | MaxPlusPresentation) -> TropicalConstants:
    """(M_f, c_f): component count and the sup-norm Lipschitz constant of the shadow.

    The Lipschitz constant of a piecewise-linear map with respect to the sup
    norm on inputs is the largest l1 norm of its gradient over full-dimensional
    pieces; a piece is the region where numerator term i and denominator
    term j are the unique maxima.  The result is floored at 1.
    """
    phi = f if isinstance(f, MaxPlusPresentation) else tropical_shadow(f)
    num, den, n = phi.positive, phi.negative, phi.dimension
    pairs = []
    for i, a in enumerate(num):
        for j, b in enumerate(den):
            hit = _active(num, den, i, j, n)
            if hit is not None:
                norm = sum(abs(x - y) for x, y in zip(a.gradient, b.gradient))
                pairs.append(ActivePair(i, j, norm, hit[0], hit[1]))
    best = max(pairs, key=lambda p: p.norm, default=None)
    c = Fraction(max(1, best.norm if best else 0))
    return TropicalConstants(len(num) * len(den), c, tuple(pairs), best)


def crude_lipschitz_bound(f: ElementaryRational | MaxPlusPresentation) -> Fraction:
    """max ||a||_1 + max ||b||_1, floored at 1; monotone under adding terms."""
    phi = f if isinstance(f, MaxPlusPresentation) else tropical_shadow(f)
    norm = lambda t: sum(abs(g) for g in t.gradient)
    return Fraction(max(1, max(map(norm, phi.positive)) + max(map(norm, phi.negative))))


def lipschitz_segment(f: ElementaryRational | MaxPlusPresentation) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]] | None:
    """Two points inside the maximising piece whose divided difference equals c_f.

    Returns None when c_f is the floor value 1 without an attaining piece.
    """
    phi = f if isinstance(f, MaxPlusPresentation) else tropical_shadow(f)
    consts = tropical_constants(phi)
    p = consts.maximiser
    if p is None or p.norm == 0:
        return None
    a, b = phi.positive[p.numerator_index], phi.negative[p.denominator_index]
    direction = [Fraction((x > y) - (x < y)) for x, y in zip(a.gradient, b.gradient)]
    # stay strictly inside the piece: every active constraint has slack >= margin
    spread = 1 + sum(abs(g) for t in phi.positive + phi.negative for g in t.gradient)
    h = p.margin / (2 * spread)
    x0 = p.interior_point
    x1 = tuple(x + h * d for x, d in zip(x0, direction))
    return x0, x1
