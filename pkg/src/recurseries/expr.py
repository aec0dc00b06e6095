"""Expression language for defining functions of one variable x.

Grammar (no implicit multiplication, ^ binds tightest and is right
associative, unary minus binds between ^ and * /):

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := ("-")? power
    power  := atom ("^" factor)?
    atom   := NUMBER | "x" | "pi" | "e" | IDENT "(" expr ")" | "(" expr ")"
    IDENT  := "sin"|"cos"|"exp"|"ln"|"sqrt"|"abs"

NUMBER is a decimal literal with optional fraction and exponent.
Trees are immutable; evaluation happens on an isolated arbitrary
precision context so concurrent callers never share state.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import mpmath
from mpmath import mp


class ExprError(ValueError):
    """Base class for parse failures; offset is a byte position in the input."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifierError(ExprError):
    pass


class ArityError(ExprError):
    pass


class EvalDomainError(ArithmeticError):
    """Raised when evaluation leaves the real domain.

    Carries the rendered offending subexpression and the input x.
    """

    def __init__(self, subexpression: str, x, reason: str):
        self.subexpression = subexpression
        self.x = x
        self.reason = reason
        super().__init__(f"{reason} in '{subexpression}' at x = {mpmath.nstr(x, 12)}")


@dataclass(frozen=True)
class Number:
    """Numeric literal; the source text is kept verbatim so the value can be
    re-read exactly at any working precision."""

    text: str


@dataclass(frozen=True)
class Var:
    """The single free variable x."""


@dataclass(frozen=True)
class Const:
    name: str  # "pi" or "e"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


Node = Union[Number, Var, Const, Call, Neg, BinOp]

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt", "abs")
CONSTANTS = ("pi", "e")

# precedence levels used by the renderer; higher binds tighter
_ADD, _MUL, _NEG, _POW, _ATOM = 1, 2, 3, 4, 5


@dataclass(frozen=True)
class FunctionDef:
    """A parsed defining function f of the single variable x."""

    root: Node
    source_text: str


@dataclass(frozen=True)
class TaylorDef:
    """Truncated Taylor data at 0: coefficients a1, a2, ..., am.

    The leading coefficient a1 is stored explicitly, never assumed to be 1.
    """

    coefficients: Tuple
    radius_hint: Optional[object] = None

    def __post_init__(self):
        if not self.coefficients:
            raise ValueError("Taylor coefficient list must be nonempty")


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            at = pos + len(text[pos:]) - len(text[pos:].lstrip())
            if at >= len(text):
                break
            raise ExprSyntaxError(f"unexpected character {text[at]!r}", at)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name"), m.start("name")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, text, offset = self.peek()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected '{op}'", offset)
        return self.take()

    def parse(self) -> Node:
        node = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input {text!r}", offset)
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.take()
                node = BinOp(text, node, self.term())
            else:
                return node

    def term(self) -> Node:
        node = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.take()
                node = BinOp(text, node, self.factor())
            else:
                return node

    def factor(self) -> Node:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.power())
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return BinOp("^", node, self.factor())
        return node

    def atom(self) -> Node:
        kind, text, offset = self.take()
        if kind == "num":
            return Number(text)
        if kind == "name":
            if text == "x":
                return Var()
            if text in CONSTANTS:
                return Const(text)
            if text in FUNCTIONS:
                self.expect_op("(")
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.take()
                    args.append(self.expr())
                self.expect_op(")")
                if len(args) != 1:
                    raise ArityError(
                        f"{text} takes 1 argument, got {len(args)}", offset
                    )
                return Call(text, args[0])
            raise UnknownIdentifierError(f"unknown identifier {text!r}", offset)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        shown = text if text else "end of input"
        raise ExprSyntaxError(f"expected a number, 'x', or '(', got {shown!r}", offset)


def parse(text: str) -> FunctionDef:
    """Parse an expression into a FunctionDef; raises ExprError on bad input."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return FunctionDef(_Parser(text).parse(), text)


def _level(node: Node) -> int:
    if isinstance(node, BinOp):
        if node.op in "+-":
            return _ADD
        if node.op in "*/":
            return _MUL
        return _POW
    if isinstance(node, Neg):
        return _NEG
    return _ATOM


def _render(node: Node) -> str:
    if isinstance(node, Number):
        return node.text
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({_render(node.arg)})"
    if isinstance(node, Neg):
        inner = _render(node.operand)
        # the grammar allows only an atom or a power after unary minus
        if _level(node.operand) < _POW:
            inner = f"({inner})"
        return f"-{inner}"
    left, right = _render(node.left), _render(node.right)
    if node.op in "+-":
        if _level(node.right) <= _ADD:
            right = f"({right})"
    elif node.op in "*/":
        if _level(node.left) < _MUL:
            left = f"({left})"
        if _level(node.right) <= _MUL:
            right = f"({right})"
    else:  # ^ requires an atom on the left and a factor on the right
        if _level(node.left) < _ATOM:
            left = f"({left})"
        if _level(node.right) < _NEG:
            right = f"({right})"
    return f"{left} {node.op} {right}"


def render(f: FunctionDef) -> str:
    """Render a tree to canonical text; parse(render(f)) rebuilds the same tree."""
    return _render(f.root)


GUARD_DIGITS = 10
DEFAULT_PRECISION = 64
MIN_PRECISION = 16


def context(precision: int = DEFAULT_PRECISION):
    """Return an isolated mpmath context carrying guard digits.

    Results are correct to the requested number of significant digits; the
    extra guard digits absorb rounding inside compositions.
    """
    if precision < MIN_PRECISION:
        raise ValueError(f"precision must be at least {MIN_PRECISION} digits")
    ctx = mp.clone()
    ctx.dps = precision + GUARD_DIGITS
    return ctx


def _compile(node: Node, ctx) -> Callable:
    if isinstance(node, Number):
        value = ctx.mpf(node.text)
        return lambda x: value
    if isinstance(node, Var):
        return lambda x: x
    if isinstance(node, Const):
        value = +ctx.pi if node.name == "pi" else ctx.exp(1)
        return lambda x: value
    if isinstance(node, Call):
        arg = _compile(node.arg, ctx)
        where = _render(node)
        if node.func == "sin":
            return lambda x: ctx.sin(arg(x))
        if node.func == "cos":
            return lambda x: ctx.cos(arg(x))
        if node.func == "exp":
            return lambda x: ctx.exp(arg(x))
        if node.func == "abs":
            return lambda x: abs(arg(x))
        if node.func == "ln":

            def _ln(x):
                v = arg(x)
                if v <= 0:
                    raise EvalDomainError(where, x, "logarithm of a non-positive value")
                return ctx.ln(v)

            return _ln

        def _sqrt(x):
            v = arg(x)
            if v < 0:
                raise EvalDomainError(where, x, "square root of a negative value")
            return ctx.sqrt(v)

        return _sqrt
    if isinstance(node, Neg):
        operand = _compile(node.operand, ctx)
        return lambda x: -operand(x)

    left = _compile(node.left, ctx)
    right = _compile(node.right, ctx)
    where = _render(node)
    if node.op == "+":
        return lambda x: left(x) + right(x)
    if node.op == "-":
        return lambda x: left(x) - right(x)
    if node.op == "*":
        return lambda x: left(x) * right(x)
    if node.op == "/":

        def _div(x):
            d = right(x)
            if d == 0:
                raise EvalDomainError(where, x, "division by zero")
            return left(x) / d

        return _div

    def _pow(x):
        b, e = left(x), right(x)
        if b == 0 and e < 0:
            raise EvalDomainError(where, x, "zero raised to a negative power")
        if b < 0 and not ctx.isint(e):
            raise EvalDomainError(where, x, "negative base with non-integer exponent")
        return ctx.power(b, e)

    return _pow


def evaluator(f: FunctionDef, ctx) -> Callable:
    """Compile f once against a context; the returned callable is reusable
    and side-effect free, so orbits and probes can call it in a tight loop."""
    return _compile(f.root, ctx)


def evaluate(f: FunctionDef, x, precision: int = DEFAULT_PRECISION):
    """Evaluate f at x with the given significant-digit precision."""
    ctx = context(precision)
    return evaluator(f, ctx)(ctx.convert(x))


def parse_constant(text: str, ctx):
    """Evaluate a constant expression (no x allowed), e.g. '-1/6' or 'pi'."""
    f = parse(text)

    def has_var(node: Node) -> bool:
        if isinstance(node, Var):
            return True
        if isinstance(node, Call):
            return has_var(node.arg)
        if isinstance(node, Neg):
            return has_var(node.operand)
        if isinstance(node, BinOp):
            return has_var(node.left) or has_var(node.right)
        return False

    if has_var(f.root):
        raise ExprSyntaxError("expected a constant, found the variable x", 0)
    return evaluator(f, ctx)(ctx.mpf(0))


def taylor_polynomial(t: TaylorDef, ctx) -> FunctionDef:
    """Build the polynomial a1*x + a2*x^2 + ... as a FunctionDef.

    Zero coefficients are skipped; coefficient values are rendered at the
    context precision, which is exact for the short decimal inputs used here.
    """
    pieces = []
    for k, coeff in enumerate(t.coefficients, start=1):
        c = ctx.convert(coeff)
        if c == 0:
            continue
        mag = abs(c)
        text = mpmath.nstr(mag, ctx.dps, strip_zeros=True)
        if mag == 1:
            body = "x" if k == 1 else f"x ^ {k}"
        elif k == 1:
            body = f"{text} * x"
        else:
            body = f"{text} * x ^ {k}"
        pieces.append(("-" if c < 0 else "+", body))
    if not pieces:
        raise ValueError("all Taylor coefficients are zero")
    sign, body = pieces[0]
    source = f"-{body}" if sign == "-" else body
    for sign, body in pieces[1:]:
        source += f" {sign} {body}"
    return parse(source)
