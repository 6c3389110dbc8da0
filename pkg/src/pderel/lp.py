"""Exact two-phase simplex over the rationals with Bland's pivoting rule."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

Row = Sequence[Fraction | int]


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: tuple[Fraction, ...] | None = None
    objective: Fraction | None = None

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"


class _Tableau:
    def __init__(self, rows: list[list[Fraction]], rhs: list[Fraction], basis: list[int]):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis

    def pivot(self, r: int, c: int) -> None:
        rows, rhs = self.rows, self.rhs
        p = rows[r][c]
        prow = [v / p for v in rows[r]]
        rows[r] = prow
        rhs[r] = rhs[r] / p
        for i, row in enumerate(rows):
            if i != r and row[c]:
                f = row[c]
                rows[i] = [a - f * b for a, b in zip(row, prow)]
                rhs[i] -= f * rhs[r]
        self.basis[r] = c

    def reduced_costs(self, cost: list[Fraction]) -> list[Fraction]:
        # maximisation: positive reduced cost means the column improves
        red = list(cost)
        for i, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.rows[i]
                for j in range(len(red)):
                    if row[j]:
                        red[j] -= cb * row[j]
        return red

    def optimise(self, cost: list[Fraction], allowed: set[int]) -> str:
        while True:
            red = self.reduced_costs(cost)
            entering = next((j for j in sorted(allowed) if red[j] > 0 and j not in self.basis), None)
            if entering is None:
                return "optimal"
            best = None
            for i, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    key = (self.rhs[i] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return "unbounded"
            self.pivot(best[1], entering)


def solve_lp(
    c: Row,
    A_ub: Sequence[Row] = (),
    b_ub: Row = (),
    A_eq: Sequence[Row] = (),
    b_eq: Row = (),
    free: Sequence[int] | bool = (),
    maximize: bool = True,
) -> LPResult:
    """Optimise ``c·x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``.

    Variables are nonnegative unless listed in ``free`` (``free=True`` frees all).
    Arithmetic is exact; Bland's rule guarantees termination.
    """
    n = len(c)
    free_set = set(range(n)) if free is True else set(free or ())
    # column layout: x+ for every variable, x- for free ones, then slacks, then artificials
    minus_col = {}
    ncols = n
    for j in sorted(free_set):
        minus_col[j] = ncols
        ncols += 1

    def expand(row: Row) -> list[Fraction]:
        out = [Fraction(0)] * ncols
        for j, v in enumerate(row):
            v = Fraction(v)
            out[j] = v
            if j in minus_col:
                out[minus_col[j]] = -v
        return out

    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    slack_of: list[int | None] = []
    for a, b in zip(A_ub, b_ub):
        rows.append(expand(a))
        rhs.append(Fraction(b))
        slack_of.append(len(rows) - 1)
    for a, b in zip(A_eq, b_eq):
        rows.append(expand(a))
        rhs.append(Fraction(b))
        slack_of.append(None)
    m = len(rows)
    n_slack = sum(1 for s in slack_of if s is not None)
    width = ncols + n_slack
    full = [r + [Fraction(0)] * n_slack for r in rows]
    basis: list[int | None] = [None] * m
    k = ncols
    for i, s in enumerate(slack_of):
        if s is not None:
            full[i][k] = Fraction(1)
            if rhs[i] >= 0:
                basis[i] = k
            k += 1
    for i in range(m):
        if rhs[i] < 0:
            full[i] = [-v for v in full[i]]
            rhs[i] = -rhs[i]
    artificials = []
    for i in range(m):
        if basis[i] is None:
            col = width + len(artificials)
            artificials.append(col)
            basis[i] = col
    total = width + len(artificials)
    for i in range(m):
        full[i] += [Fraction(0)] * len(artificials)
    for a_idx, col in enumerate(artificials):
        i = basis.index(col)
        full[i][col] = Fraction(1)

    tab = _Tableau(full, rhs, basis)  # type: ignore[arg-type]
    if artificials:
        phase1 = [Fraction(0)] * total
        for col in artificials:
            phase1[col] = Fraction(-1)
        tab.optimise(phase1, set(range(total)))
        if any(tab.rhs[i] for i, b in enumerate(tab.basis) if b in artificials):
            return LPResult("infeasible")
        art = set(artificials)
        for i in range(len(tab.rows)):
            if tab.basis[i] in art:
                j = next((j for j in range(width) if tab.rows[i][j]), None)
                if j is not None:
                    tab.pivot(i, j)
        keep = [i for i, b in enumerate(tab.basis) if b not in art]
        tab = _Tableau([tab.rows[i] for i in keep], [tab.rhs[i] for i in keep], [tab.basis[i] for i in keep])

    sign = 1 if maximize else -1
    cost = [Fraction(0)] * total
    for j, v in enumerate(c):
        cost[j] = sign * Fraction(v)
        if j in minus_col:
            cost[minus_col[j]] = -sign * Fraction(v)
    status = tab.optimise(cost, set(range(width)))
    if status == "unbounded":
        return LPResult("unbounded")
    values = [Fraction(0)] * total
    for i, b in enumerate(tab.basis):
        values[b] = tab.rhs[i]
    x = []
    for j in range(n):
        v = values[j]
        if j in minus_col:
            v -= values[minus_col[j]]
        x.append(v)
    obj = sum((Fraction(cj) * xj for cj, xj in zip(c, x)), Fraction(0))
    return LPResult("optimal", tuple(x), obj)
