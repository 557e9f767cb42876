"""Scalar expression DSL: parsing, evaluation, symbolic differentiation.

Expressions are scalar functions of the time variable ``t`` and state
variables ``x1..xn``.  The grammar covers real constants, the unary
functions ``sin, cos, exp, ln, abs, sqrt``, unary minus, and the binary
operators ``+ - * / ^`` (``**`` is accepted as a synonym for ``^``).
Precedence is ``^`` > unary minus > ``* /`` > ``+ -``; ``^`` is
right-associative, everything else left-associative.

ASTs are immutable, hashable dataclasses and safe to share across threads;
parsing, evaluation, and differentiation are pure functions.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import ConfigError

UNARY_OPS = ("neg", "sin", "cos", "exp", "ln", "abs", "sqrt")
BINARY_OPS = ("add", "sub", "mul", "div", "pow")
FUNCTIONS = ("sin", "cos", "exp", "ln", "abs", "sqrt")


class ParseError(ConfigError):
    """Malformed expression source; ``position`` is a 0-based offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (offset {position})")
        self.position = position


class DomainError(ValueError):
    """Evaluation hit a point outside an operation's domain."""

    def __init__(self, message: str, node: "Expr"):
        super().__init__(f"{message} in '{to_source(node)}'")
        self.node = node


class DifferentiationError(ValueError):
    """The symbolic derivative is not supported for this AST."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Const | Var | Unary | Binary


@dataclass(frozen=True)
class Env:
    """Point at which an expression is evaluated: time plus state vector."""

    t: float
    x: tuple[float, ...]


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_NUMBER_RE = re.compile(r"(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


class _Tokenizer:
    def __init__(self, source: str):
        self.source = source
        self.pos = 0
        self._skip_ws()

    def _skip_ws(self) -> None:
        while self.pos < len(self.source) and self.source[self.pos].isspace():
            self.pos += 1

    def peek(self) -> tuple[str, str | float, int]:
        """Return (kind, value, position) without consuming."""
        s, i = self.source, self.pos
        if i >= len(s):
            return ("end", "", i)
        m = _NUMBER_RE.match(s, i)
        if m:
            return ("num", float(m.group(0)), i)
        m = _IDENT_RE.match(s, i)
        if m:
            return ("ident", m.group(0), i)
        if s.startswith("**", i):
            return ("op", "^", i)
        if s[i] in "+-*/^()":
            return ("op", s[i], i)
        raise ParseError(f"unexpected character {s[i]!r}", i)

    def next(self) -> tuple[str, str | float, int]:
        kind, value, pos = self.peek()
        if kind == "num":
            self.pos = _NUMBER_RE.match(self.source, pos).end()
        elif kind == "ident":
            self.pos = _IDENT_RE.match(self.source, pos).end()
        elif kind == "op":
            self.pos = pos + (2 if self.source.startswith("**", pos) else 1)
        self._skip_ws()
        return kind, value, pos


class _Parser:
    def __init__(self, source: str, n: int):
        self.tokens = _Tokenizer(source)
        self.n = n

    def parse(self) -> Expr:
        node = self.expr()
        kind, value, pos = self.tokens.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing input {value!r}", pos)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, value, _ = self.tokens.peek()
            if kind == "op" and value in ("+", "-"):
                self.tokens.next()
                rhs = self.term()
                node = Binary("add" if value == "+" else "sub", node, rhs)
            else:
                return node

    def term(self) -> Expr:
        node = self.factor()
        while True:
            kind, value, _ = self.tokens.peek()
            if kind == "op" and value in ("*", "/"):
                self.tokens.next()
                rhs = self.factor()
                node = Binary("mul" if value == "*" else "div", node, rhs)
            else:
                return node

    def factor(self) -> Expr:
        kind, value, _ = self.tokens.peek()
        if kind == "op" and value == "-":
            self.tokens.next()
            return Unary("neg", self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, value, _ = self.tokens.peek()
        if kind == "op" and value == "^":
            self.tokens.next()
            # exponent parsed as a factor: right-associative, may carry a sign
            return Binary("pow", base, self.factor())
        return base

    def atom(self) -> Expr:
        kind, value, pos = self.tokens.next()
        if kind == "num":
            return Const(value)
        if kind == "op" and value == "(":
            node = self.expr()
            self._expect(")")
            return node
        if kind == "ident":
            if value in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Unary(value, arg)
            return self._variable(value, pos)
        raise ParseError("expected a number, variable, or '('", pos)

    def _expect(self, op: str) -> None:
        kind, value, pos = self.tokens.peek()
        if kind != "op" or value != op:
            raise ParseError(f"expected {op!r}", pos)
        self.tokens.next()

    def _variable(self, name: str, pos: int) -> Var:
        if name == "t":
            return Var("t")
        m = re.fullmatch(r"x(\d+)", name)
        if not m:
            raise ParseError(f"unknown identifier {name!r}", pos)
        k = int(m.group(1))
        if not 1 <= k <= self.n:
            raise ParseError(
                f"variable {name!r} out of range for order n={self.n}", pos
            )
        return Var(name)


def parse(source: str, n: int) -> Expr:
    """Parse ``source`` into an AST over t and x1..xn."""
    if n < 1:
        raise ValueError("order n must be >= 1")
    return _Parser(source, n).parse()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _pow(base: float, exponent: float) -> float:
    """math.pow with IEEE overflow-to-infinity instead of OverflowError."""
    try:
        return math.pow(base, exponent)
    except OverflowError:
        odd = (
            base < 0
            and math.isfinite(exponent)
            and exponent == int(exponent)
            and int(exponent) % 2 == 1
        )
        return -math.inf if odd else math.inf


def _exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def evaluate(expr: Expr, env: Env) -> float:
    """Evaluate the AST at ``env`` in double precision.

    Raises DomainError (naming the offending sub-expression) for division
    by zero, ln of a non-positive value, sqrt of a negative value, or a
    negative base raised to a non-integer power.
    """
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        if expr.name == "t":
            return env.t
        k = int(expr.name[1:])
        if k > len(env.x):
            raise DomainError(
                f"state vector has length {len(env.x)}", expr
            )
        return env.x[k - 1]
    if isinstance(expr, Unary):
        v = evaluate(expr.arg, env)
        if expr.op == "neg":
            return -v
        if expr.op == "sin":
            return math.sin(v)
        if expr.op == "cos":
            return math.cos(v)
        if expr.op == "exp":
            return _exp(v)
        if expr.op == "ln":
            if v <= 0.0:
                raise DomainError(f"ln of non-positive value {v!r}", expr)
            return math.log(v)
        if expr.op == "abs":
            return abs(v)
        if expr.op == "sqrt":
            if v < 0.0:
                raise DomainError(f"sqrt of negative value {v!r}", expr)
            return math.sqrt(v)
        raise AssertionError(f"unknown unary op {expr.op}")
    if isinstance(expr, Binary):
        a = evaluate(expr.left, env)
        b = evaluate(expr.right, env)
        if expr.op == "add":
            return a + b
        if expr.op == "sub":
            return a - b
        if expr.op == "mul":
            return a * b
        if expr.op == "div":
            if b == 0.0:
                raise DomainError("division by zero", expr)
            return a / b
        if expr.op == "pow":
            try:
                return _pow(a, b)
            except ValueError:
                raise DomainError(
                    f"pow undefined for base {a!r}, exponent {b!r}", expr
                ) from None
        raise AssertionError(f"unknown binary op {expr.op}")
    raise TypeError(f"not an expression node: {expr!r}")


def free_vars(expr: Expr) -> set[str]:
    """Exact set of variable names appearing in the AST."""
    if isinstance(expr, Const):
        return set()
    if isinstance(expr, Var):
        return {expr.name}
    if isinstance(expr, Unary):
        return free_vars(expr.arg)
    return free_vars(expr.left) | free_vars(expr.right)


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------
# Smart constructors fold constants and drop algebraic identities so that
# derivative ASTs stay readable.  Folds are value-preserving on the
# expression's domain.


def _const(v: float) -> Const:
    return Const(float(v))


def _neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return _const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def _add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return _const(a.value + b.value)
    if isinstance(a, Const) and a.value == 0.0:
        return b
    if isinstance(b, Const) and b.value == 0.0:
        return a
    return Binary("add", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return _const(a.value - b.value)
    if isinstance(b, Const) and b.value == 0.0:
        return a
    if isinstance(a, Const) and a.value == 0.0:
        return _neg(b)
    return Binary("sub", a, b)


def _mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return _const(a.value * b.value)
    for first, second in ((a, b), (b, a)):
        if isinstance(first, Const):
            if first.value == 0.0:
                return _const(0.0)
            if first.value == 1.0:
                return second
            if first.value == -1.0:
                return _neg(second)
    return Binary("mul", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const) and b.value == 1.0:
        return a
    if isinstance(a, Const) and a.value == 0.0:
        return _const(0.0)
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return _const(a.value / b.value)
    return Binary("div", a, b)


def _pow_node(base: Expr, exponent: float) -> Expr:
    if exponent == 1.0:
        return base
    if exponent == 0.0:
        return _const(1.0)
    return Binary("pow", base, _const(exponent))


def differentiate(expr: Expr, var: str) -> Expr:
    """Symbolic derivative of ``expr`` with respect to ``var``.

    Power nodes on the path of ``var`` must have constant exponents;
    anything else raises DifferentiationError instead of approximating.
    """
    if var not in free_vars(expr):
        return _const(0.0)
    if isinstance(expr, Var):
        return _const(1.0)
    if isinstance(expr, Unary):
        u, du = expr.arg, differentiate(expr.arg, var)
        if expr.op == "neg":
            return _neg(du)
        if expr.op == "sin":
            return _mul(Unary("cos", u), du)
        if expr.op == "cos":
            return _neg(_mul(Unary("sin", u), du))
        if expr.op == "exp":
            return _mul(expr, du)
        if expr.op == "ln":
            return _div(du, u)
        if expr.op == "sqrt":
            return _div(du, _mul(_const(2.0), expr))
        if expr.op == "abs":
            # d|u| = u/|u| * du; undefined at u = 0, surfaces as a
            # division-by-zero DomainError there
            return _mul(_div(u, expr), du)
        raise AssertionError(f"unknown unary op {expr.op}")
    if isinstance(expr, Binary):
        a, b = expr.left, expr.right
        if expr.op == "add":
            return _add(differentiate(a, var), differentiate(b, var))
        if expr.op == "sub":
            return _sub(differentiate(a, var), differentiate(b, var))
        if expr.op == "mul":
            return _add(
                _mul(differentiate(a, var), b), _mul(a, differentiate(b, var))
            )
        if expr.op == "div":
            num = _sub(
                _mul(differentiate(a, var), b), _mul(a, differentiate(b, var))
            )
            return _div(num, Binary("pow", b, _const(2.0)))
        if expr.op == "pow":
            if not isinstance(b, Const):
                raise DifferentiationError(
                    f"cannot differentiate '{to_source(expr)}' with respect "
                    f"to {var}: exponent is not constant"
                )
            c = b.value
            return _mul(
                _mul(_const(c), _pow_node(a, c - 1.0)), differentiate(a, var)
            )
        raise AssertionError(f"unknown binary op {expr.op}")
    raise TypeError(f"not an expression node: {expr!r}")


# ---------------------------------------------------------------------------
# Pretty-printing
# ---------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5
_BINARY_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


def _prec(expr: Expr) -> int:
    if isinstance(expr, Const):
        return _PREC_NEG if expr.value < 0 else _PREC_ATOM
    if isinstance(expr, Var):
        return _PREC_ATOM
    if isinstance(expr, Unary):
        return _PREC_NEG if expr.op == "neg" else _PREC_ATOM
    return _PREC_POW if expr.op == "pow" else (
        _PREC_MUL if expr.op in ("mul", "div") else _PREC_ADD
    )


def _fmt_const(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_source(expr: Expr) -> str:
    """Render the AST as a string that re-parses to an identical AST."""
    if isinstance(expr, Const):
        return _fmt_const(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Unary):
        if expr.op == "neg":
            inner = to_source(expr.arg)
            if _prec(expr.arg) < _PREC_NEG:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{expr.op}({to_source(expr.arg)})"
    op_prec = _prec(expr)
    left, right = to_source(expr.left), to_source(expr.right)
    if expr.op == "pow":
        # right-associative: parenthesize any non-atomic base
        if _prec(expr.left) <= op_prec:
            left = f"({left})"
        if _prec(expr.right) < op_prec:
            right = f"({right})"
    else:
        if _prec(expr.left) < op_prec:
            left = f"({left})"
        if _prec(expr.right) <= op_prec:
            right = f"({right})"
    return f"{left} {_BINARY_SYMBOL[expr.op]} {right}"


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------

_COMPILE_NAMESPACE = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": _exp,
    "ln": math.log,
    "abs": abs,
    "sqrt": math.sqrt,
    "pow": _pow,
    "__builtins__": {},
}


def _py_source(expr: Expr) -> str:
    if isinstance(expr, Const):
        return f"({expr.value!r})"
    if isinstance(expr, Var):
        return "t" if expr.name == "t" else f"x[{int(expr.name[1:]) - 1}]"
    if isinstance(expr, Unary):
        inner = _py_source(expr.arg)
        return f"(-{inner})" if expr.op == "neg" else f"{expr.op}({inner})"
    a, b = _py_source(expr.left), _py_source(expr.right)
    if expr.op == "pow":
        return f"pow({a}, {b})"
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[expr.op]
    return f"({a} {sym} {b})"


def compile_expr(expr: Expr):
    """Compile the AST to a fast callable ``f(t, x) -> float``.

    Produces values identical to ``evaluate`` on the expression's domain;
    domain violations raise bare ValueError/ZeroDivisionError instead of
    DomainError.
    """
    source = f"lambda t, x: {_py_source(expr)}"
    return eval(compile(source, "<expr>", "eval"), dict(_COMPILE_NAMESPACE))
