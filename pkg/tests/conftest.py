"""Shared helpers: random expression generators for property tests.

The differentiation checks compare symbolic derivatives against central
finite differences, so the generator keeps third derivatives small
(linear arguments inside trig, bounded coefficients, low powers) to keep
the finite-difference oracle itself well below the comparison tolerance.
"""

from __future__ import annotations

import numpy as np

from vpsef_dsc import expr as ex


def random_smooth_expr(rng: np.random.Generator, var: str = "t") -> ex.Expr:
    """Random polynomial/trig composition in one variable over [-2, 2]."""
    x = ex.Var(var)

    def atom() -> ex.Expr:
        kind = rng.integers(0, 6)
        if kind == 0:
            return x
        if kind == 1:
            return ex.Binary("pow", x, ex.Const(float(rng.integers(2, 4))))
        if kind == 2 or kind == 3:
            op = "sin" if kind == 2 else "cos"
            a = ex.Const(round(rng.uniform(-1.0, 1.0), 3))
            b = ex.Const(round(rng.uniform(-2.0, 2.0), 3))
            return ex.Unary(
                op, ex.Binary("add", ex.Binary("mul", a, x), b)
            )
        if kind == 4:
            c = ex.Const(round(rng.uniform(-1.0, 1.0), 3))
            return ex.Unary("exp", ex.Binary("mul", c, x))
        return ex.Const(round(rng.uniform(-2.0, 2.0), 3))

    def weighted_atom() -> ex.Expr:
        term = atom()
        if rng.random() < 0.3:
            # one mild product, e.g. x^2 * cos(a x + b)
            term = ex.Binary("mul", term, atom())
        coef = ex.Const(round(rng.uniform(-2.0, 2.0), 3))
        return ex.Binary("mul", coef, term)

    node = weighted_atom()
    for _ in range(int(rng.integers(0, 3))):
        op = "add" if rng.random() < 0.7 else "sub"
        node = ex.Binary(op, node, weighted_atom())
    return node


def random_ast(rng: np.random.Generator, n: int, depth: int = 0) -> ex.Expr:
    """Random AST over t and x1..xn with non-negative constants.

    Exercises every operator for printer/parser round-trip checks; not
    meant to be evaluated.
    """
    if depth >= 4 or rng.random() < 0.3:
        kind = rng.integers(0, 3)
        if kind == 0:
            return ex.Const(round(float(rng.uniform(0.0, 5.0)), 3))
        if kind == 1:
            return ex.Var("t")
        return ex.Var(f"x{rng.integers(1, n + 1)}")
    kind = rng.integers(0, 2)
    if kind == 0:
        op = str(rng.choice(ex.UNARY_OPS))
        return ex.Unary(op, random_ast(rng, n, depth + 1))
    op = str(rng.choice(ex.BINARY_OPS))
    return ex.Binary(
        op, random_ast(rng, n, depth + 1), random_ast(rng, n, depth + 1)
    )


def central_difference(f, x: float, h: float = 1e-5) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)
