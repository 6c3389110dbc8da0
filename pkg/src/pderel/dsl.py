"""Expression language for dynamics rules, boundary data and solution formulas.

Grammar (usual precedence, ``^`` binds tightest and is right associative)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?
    atom    := INT | NAME | NAME "[" SINT "," SINT "]" | "sqrt" "(" expr ")" | "(" expr ")"

``z[dn,dt]`` is a lattice cell at column offset ``dn`` and row offset ``dt``
relative to the cell being computed, i.e. relative to (N+1, t+1).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Context, Decimal, localcontext
from fractions import Fraction
from math import isqrt
from typing import Callable, Mapping, Sequence, Union

from .algebra import Polynomial, RationalFunction

Binding = Mapping[str, Fraction]
Offset = tuple[int, int]


class ParseError(ValueError):
    def __init__(self, message: str, text: str = "", position: int = 0):
        self.text = text
        self.position = position
        super().__init__(f"{message} at column {position + 1}" + (f": {text!r}" if text else ""))


class EvaluationError(ArithmeticError):
    pass


class UnboundSymbolError(EvaluationError, KeyError):
    def __str__(self) -> str:
        return self.args[0] if self.args else "unbound symbol"


class NotASquareError(EvaluationError):
    pass


# -- tree ---------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Cell:
    dn: int
    dt: int
    name: str = "z"

    @property
    def offset(self) -> Offset:
        return (self.dn, self.dt)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: "Node"


@dataclass(frozen=True)
class Sqrt:
    operand: "Node"


Node = Union[Num, Sym, Cell, BinOp, Neg, Pow, Sqrt]


@dataclass(frozen=True)
class Expression:
    """Parsed expression with its stencil and free-symbol metadata.

    ``stencil`` holds target-relative offsets (the canonical convention);
    ``stencil_from_origin`` the same cells indexed relative to (N, t).
    """

    tree: Node
    text: str = field(default="", compare=False)

    @property
    def stencil(self) -> tuple[Offset, ...]:
        return tuple(sorted({c.offset for c in _walk(self.tree) if isinstance(c, Cell)}, key=_offset_key))

    @property
    def stencil_from_origin(self) -> tuple[Offset, ...]:
        return tuple((dn + 1, dt + 1) for dn, dt in self.stencil)

    @property
    def symbols(self) -> frozenset[str]:
        return frozenset(n.name for n in _walk(self.tree) if isinstance(n, Sym))

    def __str__(self) -> str:
        return to_text(self)


def _offset_key(o: Offset) -> tuple[int, int]:
    return (o[1], o[0])


def _walk(node: Node):
    yield node
    if isinstance(node, BinOp):
        yield from _walk(node.left)
        yield from _walk(node.right)
    elif isinstance(node, (Neg, Sqrt)):
        yield from _walk(node.operand)
    elif isinstance(node, Pow):
        yield from _walk(node.base)
        yield from _walk(node.exponent)


# -- parsing ------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<int>\d+)(?![\d.])|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),\[\]]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError("unexpected character", text, start)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, msg: str):
        raise ParseError(msg, self.text, self.tok[2])

    def take(self, value: str | None = None, kind: str | None = None):
        k, v, _ = self.tok
        if (value is not None and v != value) or (kind is not None and k != kind):
            self.error(f"expected {value or kind!r}, found {v or 'end of input'!r}")
        self.i += 1
        return v

    def expr(self) -> Node:
        node = self.term()
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            op = self.take()
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok[1] in ("*", "/") and self.tok[0] == "op":
            op = self.take()
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.tok[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok[:2] == ("op", "^"):
            self.take()
            pos = self.tok[2]
            exponent = self.unary()
            if not any(isinstance(n, (Sym, Cell)) for n in _walk(exponent)):
                try:
                    value = _evaluate(exponent, {}, None, _EXACT)
                except EvaluationError as exc:
                    raise ParseError(f"invalid exponent ({exc})", self.text, pos) from None
                if value.denominator != 1:
                    raise ParseError("non-integer exponent", self.text, pos)
            elif any(isinstance(n, Cell) for n in _walk(exponent)):
                raise ParseError("cell reference in exponent", self.text, pos)
            return Pow(base, exponent)
        return base

    def signed_int(self) -> int:
        sign = 1
        if self.tok[:2] in (("op", "+"), ("op", "-")):
            sign = -1 if self.take() == "-" else 1
        if self.tok[0] != "int":
            self.error("malformed cell reference")
        return sign * int(self.take())

    def atom(self) -> Node:
        kind, value, _ = self.tok
        if kind == "int":
            self.take()
            return Num(Fraction(int(value)))
        if kind == "name":
            self.take()
            if value == "sqrt" and self.tok[:2] == ("op", "("):
                self.take("(")
                inner = self.expr()
                self.take(")")
                return Sqrt(inner)
            if self.tok[:2] == ("op", "["):
                self.take("[")
                dn = self.signed_int()
                if self.tok[1] != ",":
                    self.error("malformed cell reference")
                self.take(",")
                dt = self.signed_int()
                if self.tok[1] != "]":
                    self.error("malformed cell reference")
                self.take("]")
                return Cell(dn, dt, value)
            return Sym(value)
        if (kind, value) == ("op", "("):
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        self.error(f"unexpected {value or 'end of input'!r}")


def parse(text: str) -> Expression:
    p = _Parser(text)
    if p.tok[0] == "end":
        p.error("empty expression")
    tree = p.expr()
    if p.tok[0] != "end":
        p.error(f"unexpected {p.tok[1]!r}")
    return Expression(tree, text)


# -- printing -----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Pow):
        return 4
    if isinstance(node, Num) and node.value.denominator != 1:
        return 2
    if isinstance(node, Num) and node.value < 0:
        return 3
    return 5


def _text(node: Node) -> str:
    if isinstance(node, Num):
        v = node.value
        if v < 0:
            return "-" + _text(Num(-v))
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Cell):
        return f"{node.name}[{node.dn},{node.dt}]"
    if isinstance(node, Sqrt):
        return f"sqrt({_text(node.operand)})"
    if isinstance(node, Neg):
        inner = _text(node.operand)
        return "-" + (f"({inner})" if _prec(node.operand) < 3 else inner)
    if isinstance(node, Pow):
        b = _text(node.base)
        if _prec(node.base) <= 4:
            b = f"({b})"
        e = _text(node.exponent)
        if _prec(node.exponent) < 3:
            e = f"({e})"
        return f"{b}^{e}"
    p = _PREC[node.op]
    left = _text(node.left)
    if _prec(node.left) < p:
        left = f"({left})"
    right = _text(node.right)
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}" if p == 1 else f"{left}{node.op}{right}"


def to_text(e: Expression | Node) -> str:
    return _text(e.tree if isinstance(e, Expression) else e)


# -- evaluation ---------------------------------------------------------------


@dataclass(frozen=True)
class _Arith:
    lift: Callable[[Fraction], object]
    sqrt: Callable[[object], object]
    is_zero: Callable[[object], bool]


def _exact_sqrt(q: Fraction) -> Fraction:
    if q < 0:
        raise NotASquareError(f"square root of negative number {q}")
    n, d = isqrt(q.numerator), isqrt(q.denominator)
    if n * n != q.numerator or d * d != q.denominator:
        raise NotASquareError(f"{q} is not the square of a rational")
    return Fraction(n, d)


_EXACT = _Arith(Fraction, _exact_sqrt, lambda v: v == 0)


def _evaluate(node: Node, binding: Binding, cells: Callable[[Offset], object] | None, ar: _Arith):
    if isinstance(node, Num):
        return ar.lift(node.value)
    if isinstance(node, Sym):
        try:
            return ar.lift(Fraction(binding[node.name]))
        except KeyError:
            raise UnboundSymbolError(f"unbound symbol {node.name!r}") from None
    if isinstance(node, Cell):
        if cells is None:
            raise EvaluationError(f"cell reference {to_text(node)} outside a dynamics context")
        return cells(node.offset)
    if isinstance(node, Neg):
        return -_evaluate(node.operand, binding, cells, ar)
    if isinstance(node, Sqrt):
        return ar.sqrt(_evaluate(node.operand, binding, cells, ar))
    if isinstance(node, Pow):
        k = _evaluate(node.exponent, binding, None, _EXACT)
        if k.denominator != 1:
            raise EvaluationError(f"non-integer exponent {k}")
        base = _evaluate(node.base, binding, cells, ar)
        if k < 0 and ar.is_zero(base):
            raise EvaluationError("division by zero (negative power of zero)")
        return base ** int(k)
    a = _evaluate(node.left, binding, cells, ar)
    b = _evaluate(node.right, binding, cells, ar)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if ar.is_zero(b):
        raise EvaluationError("division by zero")
    return a / b


def evaluate(e: Expression, binding: Binding | None = None, cells: Callable[[Offset], Fraction] | None = None) -> Fraction:
    """Exact rational value; ``sqrt`` is allowed only of rational squares."""
    return _evaluate(e.tree, binding or {}, cells, _EXACT)


def evaluate_decimal(
    e: Expression,
    binding: Binding | None = None,
    cells: Callable[[Offset], Decimal] | None = None,
    context: Context | None = None,
) -> Decimal:
    ctx = context or Context(prec=50)

    def lift(q: Fraction) -> Decimal:
        return ctx.divide(Decimal(q.numerator), Decimal(q.denominator))

    def sqrt(v: Decimal) -> Decimal:
        if v < 0:
            raise NotASquareError(f"square root of negative number {v}")
        return ctx.sqrt(v)

    with localcontext(ctx):
        return +_evaluate(e.tree, binding or {}, cells, _Arith(lift, sqrt, lambda v: v == 0))


# -- symbolic manipulation ----------------------------------------------------


def _num(v) -> Num:
    return Num(Fraction(v))


def _add(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    if isinstance(a, Num) and a.value == 0:
        return b
    if isinstance(b, Num) and b.value == 0:
        return a
    return BinOp("+", a, b)


def _sub(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value - b.value)
    if isinstance(b, Num) and b.value == 0:
        return a
    if isinstance(a, Num) and a.value == 0:
        return _neg(b)
    return BinOp("-", a, b)


def _neg(a: Node) -> Node:
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def _mul(a: Node, b: Node) -> Node:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    for x, y in ((a, b), (b, a)):
        if isinstance(x, Num):
            if x.value == 0:
                return _num(0)
            if x.value == 1:
                return y
    return BinOp("*", a, b)


def _div(a: Node, b: Node) -> Node:
    if isinstance(b, Num) and b.value == 1:
        return a
    if isinstance(a, Num) and a.value == 0:
        return a
    if isinstance(a, Num) and isinstance(b, Num) and b.value != 0:
        return Num(a.value / b.value)
    return BinOp("/", a, b)


def _pow(a: Node, k: Node) -> Node:
    if isinstance(k, Num):
        if k.value == 0:
            return _num(1)
        if k.value == 1:
            return a
    return Pow(a, k)


def differentiate(e: Expression | Node, var: str) -> Expression:
    """Symbolic derivative with light constant folding."""
    node = e.tree if isinstance(e, Expression) else e
    return Expression(_diff(node, var))


def _diff(n: Node, v: str) -> Node:
    if isinstance(n, Num) or isinstance(n, Cell):
        return _num(0)
    if isinstance(n, Sym):
        return _num(1 if n.name == v else 0)
    if isinstance(n, Neg):
        return _neg(_diff(n.operand, v))
    if isinstance(n, Sqrt):
        return _div(_diff(n.operand, v), _mul(_num(2), n))
    if isinstance(n, Pow):
        if any(isinstance(m, Sym) and m.name == v for m in _walk(n.exponent)):
            raise EvaluationError("exponent depends on the differentiation variable")
        k = n.exponent
        km1 = Num(k.value - 1) if isinstance(k, Num) else BinOp("-", k, _num(1))
        return _mul(_mul(k, _pow(n.base, km1)), _diff(n.base, v))
    a, b = n.left, n.right
    da, db = _diff(a, v), _diff(b, v)
    if n.op == "+":
        return _add(da, db)
    if n.op == "-":
        return _sub(da, db)
    if n.op == "*":
        return _add(_mul(da, b), _mul(a, db))
    return _div(_sub(_mul(da, b), _mul(a, db)), _pow(b, _num(2)))


def substitute(e: Expression, values: Mapping[str, Node | Fraction | int]) -> Expression:
    """Replace symbols by subtrees or numbers."""
    repl = {k: (v if isinstance(v, (Num, Sym, Cell, BinOp, Neg, Pow, Sqrt)) else _num(v)) for k, v in values.items()}

    def go(n: Node) -> Node:
        if isinstance(n, Sym):
            return repl.get(n.name, n)
        if isinstance(n, BinOp):
            return BinOp(n.op, go(n.left), go(n.right))
        if isinstance(n, Neg):
            return Neg(go(n.operand))
        if isinstance(n, Sqrt):
            return Sqrt(go(n.operand))
        if isinstance(n, Pow):
            return Pow(go(n.base), go(n.exponent))
        return n

    return Expression(go(e.tree))


def to_rational_function(
    e: Expression,
    variables: Sequence[Offset | str],
    binding: Binding | None = None,
) -> RationalFunction:
    """Convert to a num/den presentation in ``variables`` (cells or symbol names).

    Symbols that are not variables must be bound; ``sqrt`` is rejected.
    """
    binding = binding or {}
    index = {v: i for i, v in enumerate(variables)}
    nv = len(variables)

    def go(n: Node) -> RationalFunction:
        if isinstance(n, Num):
            return RationalFunction(Polynomial.constant(n.value, nv))
        if isinstance(n, Cell):
            if n.offset not in index:
                raise EvaluationError(f"cell {to_text(n)} is not among the variables")
            return RationalFunction(Polynomial.variable(index[n.offset], nv))
        if isinstance(n, Sym):
            if n.name in index:
                return RationalFunction(Polynomial.variable(index[n.name], nv))
            if n.name not in binding:
                raise UnboundSymbolError(f"unbound symbol {n.name!r}")
            return RationalFunction(Polynomial.constant(binding[n.name], nv))
        if isinstance(n, Neg):
            return -go(n.operand)
        if isinstance(n, Sqrt):
            raise EvaluationError("sqrt is not allowed in a rational presentation")
        if isinstance(n, Pow):
            k = _evaluate(n.exponent, binding, None, _EXACT)
            if k.denominator != 1:
                raise EvaluationError(f"non-integer exponent {k}")
            return go(n.base) ** int(k)
        a, b = go(n.left), go(n.right)
        if n.op == "+":
            return a + b
        if n.op == "-":
            return a - b
        if n.op == "*":
            return a * b
        try:
            return a / b
        except ZeroDivisionError:
            raise EvaluationError("division by zero") from None

    return go(e.tree)
