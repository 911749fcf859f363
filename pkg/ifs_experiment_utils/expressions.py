"""
Multiplier functions written as text, e.g. "x**2", "cos(3*x0) + abs(x1)".

Variables are `x` in one dimension and `x0`..`x{d-1}` otherwise. The
Lipschitz constant on the ambient box is the Euclidean norm of the
per-coordinate sups of |da/dx_i|, each sup taken from an interval
(AccumBounds) evaluation of the symbolic derivative.
"""
import numpy as np
import sympy
from sympy import AccumBounds
from sympy.parsing.sympy_parser import (
    convert_xor,
    lambda_notation,
    parse_expr,
    standard_transformations,
)

from ifs_experiment_utils.approx import ContinuousFunctionSpec
from ifs_experiment_utils.errors import FunctionSyntaxError
from ifs_experiment_utils.ifs_core import Box

ALLOWED_FUNCTIONS = {
    "cos": sympy.cos,
    "sin": sympy.sin,
    "exp": sympy.exp,
    "abs": sympy.Abs,
}
_TRANSFORMATIONS = (
    tuple(t for t in standard_transformations if t is not lambda_notation)
    + (convert_xor,)
)


def variable_names(dimension):
    if dimension == 1:
        return ["x"]
    return [f"x{j}" for j in range(dimension)]


def parse_expression(text, dimension):
    symbols = [sympy.Symbol(name, real=True) for name in variable_names(dimension)]
    local_dict = {s.name: s for s in symbols}
    local_dict.update(ALLOWED_FUNCTIONS)
    local_dict["pi"] = sympy.pi
    try:
        expr = parse_expr(
            str(text), local_dict=local_dict, transformations=_TRANSFORMATIONS
        )
    except Exception as e:
        raise FunctionSyntaxError(f"cannot parse function '{text}': {e}") from e
    if not isinstance(expr, sympy.Expr):
        raise FunctionSyntaxError(f"'{text}' is not a real-valued expression")
    unknown = expr.free_symbols - set(symbols)
    if unknown:
        raise FunctionSyntaxError(
            f"unknown symbols {sorted(s.name for s in unknown)} in '{text}', "
            f"expected variables {variable_names(dimension)}"
        )
    allowed = tuple(ALLOWED_FUNCTIONS.values())
    for function in expr.atoms(sympy.Function):
        if not isinstance(function, allowed):
            raise FunctionSyntaxError(
                f"unsupported function '{function.func}' in '{text}', "
                f"expected one of {sorted(ALLOWED_FUNCTIONS)}"
            )
    return expr, symbols


def _interval(expr, bounds):
    """Encloses the range of expr over the box given by {symbol: AccumBounds}."""
    if not expr.free_symbols:
        return expr
    if expr.is_Symbol:
        return bounds[expr]
    args = [_interval(arg, bounds) for arg in expr.args]
    if isinstance(expr, sympy.Abs):
        (inner,) = args
        if not isinstance(inner, AccumBounds):
            return abs(inner)
        low = 0 if inner.min <= 0 <= inner.max else min(abs(inner.min), abs(inner.max))
        return AccumBounds(low, max(abs(inner.min), abs(inner.max)))
    if isinstance(expr, sympy.sign):
        (inner,) = args
        if not isinstance(inner, AccumBounds):
            return sympy.sign(inner)
        return AccumBounds(sympy.sign(inner.min), sympy.sign(inner.max))
    return expr.func(*args)


def _sup_abs(enclosure):
    if isinstance(enclosure, AccumBounds):
        values = [enclosure.min, enclosure.max]
    else:
        values = [enclosure]
    if not all(v.is_number and v.is_finite for v in map(sympy.sympify, values)):
        return None
    return max(abs(float(v)) for v in values)


def lipschitz_bound(expr, symbols, box: Box):
    """None when some partial derivative has no finite enclosure."""
    bounds = {
        s: AccumBounds(sympy.Float(lo), sympy.Float(hi)) if lo < hi else sympy.Float(lo)
        for s, lo, hi in zip(symbols, box.lo, box.hi)
    }
    sups = []
    for s in symbols:
        derivative = sympy.diff(expr, s)
        if derivative == 0:
            sups.append(0.0)
            continue
        try:
            sup = _sup_abs(_interval(derivative, bounds))
        except (TypeError, ValueError, NotImplementedError):
            sup = None
        if sup is None:
            return None
        sups.append(sup)
    return float(np.linalg.norm(sups))


def parse_function(text, dimension, box: Box = None) -> ContinuousFunctionSpec:
    expr, symbols = parse_expression(text, dimension)

    def evaluator(points):
        points = np.asarray(points, dtype=float)
        return compiled(*[points[..., j] for j in range(dimension)])

    trial_point = box.center if box is not None else np.zeros(dimension)
    try:
        compiled = sympy.lambdify(symbols, expr, modules="numpy")
        with np.errstate(all="ignore"):
            evaluator(np.asarray(trial_point, dtype=float)[None, :])
    except Exception as e:
        raise FunctionSyntaxError(f"cannot evaluate function '{text}': {e}") from e

    lipschitz = lipschitz_bound(expr, symbols, box) if box is not None else None
    return ContinuousFunctionSpec(evaluator, lipschitz=lipschitz, name=str(text))
