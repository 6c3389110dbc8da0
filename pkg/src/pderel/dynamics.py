"""Exact or high-precision evolution of lattice rules z_{N+1}^{t+1} = f(...).

Offsets in rules are relative to the cell being computed.  Rows are filled
in ascending t and, inside a row, in ascending N, so same-row cells to the
left are always available.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import Context, Decimal
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .dsl import Binding, EvaluationError, Expression, Offset, evaluate, evaluate_decimal, parse

Value = Union[Fraction, Decimal]


class EvolutionError(ArithmeticError):
    def __init__(self, message: str, cell: tuple[int, int] | None = None):
        self.cell = cell
        super().__init__(message if cell is None else f"{message} at cell (N={cell[0]}, t={cell[1]})")


@dataclass(frozen=True)
class SupportRegion:
    """Cells the recursion cannot produce, plus the row widths it needs."""

    columns: range
    rows: range
    width: int  # last column index needed on row 0
    right_reach: int
    window: tuple[int, int]

    def row_width(self, t: int) -> int:
        """Last column index needed on row t."""
        return self.window[0] + self.right_reach * (self.window[1] - t)

    def prescribed(self, N: int, t: int) -> bool:
        return N in self.columns or t in self.rows


def required_support(stencil: Iterable[Offset], window: tuple[int, int]) -> SupportRegion:
    """Prescribed columns 0..l-1, rows 0..d-1 and the row-0 width N_max + k*t_max.

    Here l is the largest left reach, d the depth and k the largest right reach
    per time step (floored at 0).  Every computed cell in row t needs row t-1
    up to k columns further right.
    """
    stencil = list(stencil)
    n_max, t_max = window
    left = max([0] + [-dn for dn, _ in stencil])
    depth = max([0] + [-dt for _, dt in stencil])
    right = max([0] + [-(-dn // -dt) if dn > 0 else 0 for dn, dt in stencil if dt < 0])
    return SupportRegion(range(left), range(depth), n_max + right * t_max, right, (n_max, t_max))


@dataclass(frozen=True)
class EvolutionSpec:
    rule: Expression | None  # None: every cell comes from the boundary formula
    boundary: Expression
    parameters: Mapping[str, Fraction] = field(default_factory=dict)
    backend: str = "exact"
    precision: int = 100

    def __post_init__(self):
        if self.backend not in ("exact", "decimal"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.rule is not None:
            for dn, dt in self.rule.stencil:
                if not (dt <= -1 or (dt == 0 and dn <= -1)):
                    raise ValueError(f"offset {(dn, dt)} is not strictly before the target cell")

    @classmethod
    def from_text(cls, rule: str | None, boundary: str, parameters: Mapping[str, object] | None = None, **kw) -> EvolutionSpec:
        params = {k: Fraction(v) if not isinstance(v, str) else Fraction(evaluate(parse(v))) for k, v in (parameters or {}).items()}
        return cls(parse(rule) if rule else None, parse(boundary), params, **kw)


@dataclass(frozen=True)
class GridFlow:
    """Values z_N^t on a window; absent cells are None."""

    window: tuple[int, int]
    rows: tuple[tuple[Value | None, ...], ...]
    provenance: tuple[tuple[str | None, ...], ...]
    precision: int | None = None  # None for exact rationals

    def __call__(self, N: int, t: int) -> Value:
        v = self.get(N, t)
        if v is None:
            raise KeyError(f"cell (N={N}, t={t}) is not stored")
        return v

    def get(self, N: int, t: int) -> Value | None:
        if 0 <= t < len(self.rows) and 0 <= N < len(self.rows[t]):
            return self.rows[t][N]
        return None

    def __contains__(self, cell: tuple[int, int]) -> bool:
        return self.get(*cell) is not None

    @property
    def exact(self) -> bool:
        return self.precision is None

    def cells(self) -> Iterator[tuple[int, int, Value]]:
        for t, row in enumerate(self.rows):
            for N, v in enumerate(row):
                if v is not None:
                    yield N, t, v

    def to_csv(self, digits: int = 20, exact: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "t", "value", "provenance"])
        for N, t, v in self.cells():
            w.writerow([N, t, render_value(v, digits, exact), self.provenance[t][N]])
        return buf.getvalue()


def render_value(v: Value, digits: int = 20, exact: bool = False) -> str:
    if exact and isinstance(v, Fraction):
        return str(v)
    ctx = Context(prec=digits)
    d = ctx.divide(Decimal(v.numerator), Decimal(v.denominator)) if isinstance(v, Fraction) else ctx.plus(v)
    return f"{d:.{digits - 1}E}" if d else "0"


def _to_decimal(q: Fraction, ctx: Context) -> Decimal:
    return ctx.divide(Decimal(q.numerator), Decimal(q.denominator))


def boundary_value(spec: EvolutionSpec, N: int, t: int) -> Fraction:
    binding = dict(spec.parameters)
    binding.update(N=Fraction(N), t=Fraction(t))
    return evaluate(spec.boundary, binding)


def evolve(spec: EvolutionSpec, window: tuple[int, int]) -> GridFlow:
    """Fill the window (plus the right margin the stencil needs) row by row."""
    n_max, t_max = window
    stencil = spec.rule.stencil if spec.rule is not None else ()
    support = required_support(stencil, window)
    ctx = Context(prec=spec.precision)
    rows: list[list[Value | None]] = []
    prov: list[list[str | None]] = []
    binding = dict(spec.parameters)
    for t in range(t_max + 1):
        width = support.row_width(t)
        row: list[Value | None] = []
        prow: list[str | None] = []
        rows.append(row)
        prov.append(prow)
        for N in range(width + 1):
            if spec.rule is None or support.prescribed(N, t):
                try:
                    q = boundary_value(spec, N, t)
                except EvaluationError as exc:
                    raise EvolutionError(f"boundary formula failed: {exc}", (N, t)) from None
                value: Value = q if spec.backend == "exact" else _to_decimal(q, ctx)
                kind = "prescribed"
            else:

                def cell(off: Offset, N=N, t=t) -> Value:
                    v = rows[t + off[1]][N + off[0]] if 0 <= N + off[0] < len(rows[t + off[1]]) else None
                    if v is None:
                        raise EvolutionError(f"dependency {off} is outside the stored region", (N, t))
                    return v

                try:
                    if spec.backend == "exact":
                        value = evaluate(spec.rule, binding, cell)
                    else:
                        value = evaluate_decimal(spec.rule, binding, cell, ctx)
                except EvaluationError as exc:
                    raise EvolutionError(str(exc), (N, t)) from None
                kind = "computed"
            if value <= 0:
                raise EvolutionError(f"nonpositive value {value}", (N, t))
            row.append(value)
            prow.append(kind)
    return GridFlow(
        window,
        tuple(tuple(r) for r in rows),
        tuple(tuple(p) for p in prov),
        None if spec.backend == "exact" else spec.precision,
    )


def tabulate(formula: Expression, window: tuple[int, int], parameters: Mapping[str, Fraction] | None = None, **kw) -> GridFlow:
    """A closed-form flow: every cell of the window is prescribed."""
    return evolve(EvolutionSpec(None, formula, dict(parameters or {}), **kw), window)
