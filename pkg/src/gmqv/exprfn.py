"""Arithmetic mini-language for factor and mean segments.

Grammar (recursive descent, standard precedence):

    expr   -> term  (('+' | '-') term)*
    term   -> unary (('*' | '/') unary)*
    unary  -> '-' unary | power
    power  -> atom ('^' unary)?          # right-associative
    atom   -> NUMBER | 'x' | ('exp' | 'ln') '(' expr ')' | '(' expr ')'

So '^' binds tightest (``2^3^2`` is 512, ``-2^2`` is -4), then unary minus,
then '*' '/', then '+' '-'.  The only variable is ``x``; the only functions
are ``exp`` and ``ln``.  Numeric literals are decimal with an optional
exponent part; negative constants are spelled with unary minus.

Expressions are immutable trees and evaluation is pure, so parsed
expressions can be shared freely across threads.
"""

from dataclasses import dataclass
import math
import re


class ParseError(ValueError):
    """Syntax error in an expression, with the byte offset of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class DomainError(ArithmeticError):
    """Evaluation left the expression's domain (division by zero, ln of a
    non-positive number, fractional power of a negative, overflow)."""

    def __init__(self, message, expr, x):
        super().__init__(f"{message} in '{to_source(expr)}' at x={x!r}")
        self.expr = expr
        self.x = x


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    """The variable ``x``."""


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str  # exp | ln
    arg: "Expr"


Expr = Num | Var | Neg | BinOp | Call

_FUNCTIONS = ("exp", "ln")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", pos)
        if m.lastgroup == "number":
            tokens.append(("number", float(m.group()), pos))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group(), pos))
        elif m.lastgroup == "op":
            tokens.append(("op", m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    @property
    def current(self):
        return self.tokens[self.i]

    def advance(self):
        self.i += 1

    def match_op(self, *ops):
        kind, value, _ = self.current
        if kind == "op" and value in ops:
            self.advance()
            return value
        return None

    def expect_op(self, op):
        kind, value, offset = self.current
        if kind != "op" or value != op:
            raise ParseError(f"expected '{op}'", offset)
        self.advance()

    def expr(self):
        node = self.term()
        while (op := self.match_op("+", "-")) is not None:
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while (op := self.match_op("*", "/")) is not None:
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.match_op("-"):
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.match_op("^"):
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, value, offset = self.current
        if kind == "number":
            self.advance()
            return Num(value)
        if kind == "ident":
            if value == "x":
                self.advance()
                return Var()
            if value in _FUNCTIONS:
                self.advance()
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(value, arg)
            raise ParseError(
                f"unknown identifier {value!r} (expected 'x', 'exp' or 'ln')", offset
            )
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError("expected a number, 'x', a function call or '('", offset)


def parse(source: str) -> Expr:
    """Parse ``source`` into an expression tree.

    Raises ParseError (carrying the byte offset and what was expected) on
    malformed input, including empty input, unbalanced parentheses and
    identifiers other than ``x``/``exp``/``ln``.
    """
    if not source or not source.strip():
        raise ParseError("empty expression", 0)
    parser = _Parser(_tokenize(source))
    node = parser.expr()
    kind, _, offset = parser.current
    if kind != "end":
        raise ParseError("expected end of expression", offset)
    return node


def evaluate(e: Expr, x: float) -> float:
    """Evaluate ``e`` at ``x``.

    Total on the expression's domain; anything that would produce a
    non-finite value (division by zero, ln of a non-positive number,
    fractional powers of negatives, overflow) raises DomainError instead.
    """
    match e:
        case Num(value):
            return value
        case Var():
            return x
        case Neg(operand):
            return -evaluate(operand, x)
        case Call("exp", arg):
            try:
                return math.exp(evaluate(arg, x))
            except OverflowError:
                raise DomainError("exp overflow", e, x) from None
        case Call("ln", arg):
            v = evaluate(arg, x)
            if v <= 0.0:
                raise DomainError(f"ln of non-positive value {v!r}", e, x)
            return math.log(v)
        case BinOp(op, left, right):
            a = evaluate(left, x)
            b = evaluate(right, x)
            if op == "+":
                result = a + b
            elif op == "-":
                result = a - b
            elif op == "*":
                result = a * b
            elif op == "/":
                if b == 0.0:
                    raise DomainError("division by zero", e, x)
                result = a / b
            else:  # ^
                if a < 0.0 and b != math.floor(b):
                    raise DomainError(
                        f"fractional power {b!r} of negative base {a!r}", e, x
                    )
                try:
                    result = math.pow(a, b)
                except (OverflowError, ValueError):
                    raise DomainError("power out of range", e, x) from None
            if not math.isfinite(result):
                raise DomainError("non-finite result", e, x)
            return result
    raise TypeError(f"not an expression node: {e!r}")


# Precedence levels used by the printer; parenthesization keeps the printed
# form re-parsing to a structurally identical tree.
_ADD, _MUL, _UNARY, _POW, _ATOM = 1, 2, 3, 4, 5


def _level(e: Expr) -> int:
    match e:
        case BinOp("+" | "-", _, _):
            return _ADD
        case BinOp("*" | "/", _, _):
            return _MUL
        case Neg(_):
            return _UNARY
        case BinOp("^", _, _):
            return _POW
        case _:
            return _ATOM


def _wrap(e: Expr, minimum: int) -> str:
    s = to_source(e)
    return f"({s})" if _level(e) < minimum else s


def to_source(e: Expr) -> str:
    """Render ``e`` back to the grammar above.

    For any tree produced by parse(), parse(to_source(e)) == e.  Manually
    built negative literals are normalized to unary minus.
    """
    match e:
        case Num(value):
            if value < 0.0 or math.copysign(1.0, value) < 0.0:
                return f"-{-value!r}"
            return repr(value)
        case Var():
            return "x"
        case Neg(operand):
            return "-" + _wrap(operand, _UNARY)
        case BinOp("^", left, right):
            return _wrap(left, _ATOM) + "^" + _wrap(right, _UNARY)
        case BinOp(op, left, right) if op in "+-":
            return _wrap(left, _ADD) + op + _wrap(right, _ADD + 1)
        case BinOp(op, left, right):
            return _wrap(left, _MUL) + op + _wrap(right, _MUL + 1)
        case Call(func, arg):
            return f"{func}({to_source(arg)})"
    raise TypeError(f"not an expression node: {e!r}")
