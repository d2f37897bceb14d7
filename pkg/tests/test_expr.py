import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holonomylab import expr as ex
from holonomylab.errors import ExprDomainError, ExprSyntaxError, UnknownIdentifierError

from oracles import central_difference
from strategies import any_exprs, smooth_exprs


def test_parse_and_evaluate_sum():
    e = ex.parse("2*x1 + sin(x2)^2")
    assert ex.evaluate(e, [1.0, math.pi / 2]) == pytest.approx(3.0, abs=1e-15)


def test_unbalanced_call_reports_offset():
    with pytest.raises(ExprSyntaxError) as info:
        ex.parse("sin(")
    assert info.value.offset == 4


def test_unary_negation_of_call():
    e = ex.parse("-cos(x1)")
    assert e == ex.Neg(ex.Call("cos", ex.Var(1)))
    assert ex.evaluate(e, [0.0]) == -1.0


@pytest.mark.parametrize(
    "source, expected",
    [
        ("x1^2^3", ex.BinOp("^", ex.Var(1), ex.BinOp("^", ex.Num(2.0), ex.Num(3.0)))),
        ("-x1^2", ex.Neg(ex.BinOp("^", ex.Var(1), ex.Num(2.0)))),
        ("1 - 2 - 3", ex.BinOp("-", ex.BinOp("-", ex.Num(1.0), ex.Num(2.0)), ex.Num(3.0))),
        ("1 + 2 * 3", ex.BinOp("+", ex.Num(1.0), ex.BinOp("*", ex.Num(2.0), ex.Num(3.0)))),
        ("-2 * x1", ex.BinOp("*", ex.Neg(ex.Num(2.0)), ex.Var(1))),
        ("x1^-1", ex.BinOp("^", ex.Var(1), ex.Neg(ex.Num(1.0)))),
        ("x12", ex.Var(12)),
        ("pi", ex.PI),
        ("1.5e-3", ex.Num(1.5e-3)),
    ],
)
def test_precedence_and_associativity(source, expected):
    assert ex.parse(source) == expected


@pytest.mark.parametrize(
    "source, offset",
    [("", 0), ("1 +", 3), ("(x1", 3), ("x1 x2", 3), ("sin x1", 4), ("2 $ 3", 2), ("x1^x2", 3), ("x1^pi", 3), ("+x1", 0)],
)
def test_syntax_errors(source, offset):
    with pytest.raises(ExprSyntaxError) as info:
        ex.parse(source)
    assert info.value.offset == offset


@pytest.mark.parametrize("source, name", [("foo + 1", "foo"), ("x0", "x0"), ("2*y", "y"), ("x4", "x4")])
def test_unknown_identifiers(source, name):
    with pytest.raises(UnknownIdentifierError) as info:
        ex.parse(source, dim=3)
    assert info.value.name == name


def test_aliases_map_names_to_coordinates():
    assert ex.parse("2*t", dim=1, aliases={"t": 1}) == ex.BinOp("*", ex.Num(2.0), ex.Var(1))


def test_evaluate_product():
    assert ex.evaluate(ex.parse("x1^2*x2"), [3.0, 4.0]) == 36.0


@pytest.mark.parametrize(
    "source, point",
    [("log(x1)", [0.0]), ("log(x1)", [-1.0]), ("sqrt(x1)", [-1e-3]), ("1/x1", [0.0]),
     ("tan(x1)", [math.pi / 2]), ("x1^-2", [0.0]), ("x1^0.5", [-2.0]), ("exp(x1)", [1000.0])],
)
def test_domain_errors(source, point):
    with pytest.raises(ExprDomainError):
        ex.evaluate(ex.parse(source), point)


def test_sqrt_defining_property():
    v = ex.evaluate(ex.parse("sqrt(x1)"), [2.0])
    assert abs(v * v - 2.0) < 1e-12


def test_evaluate_batch_reports_witness():
    pts = np.array([[1.0], [2.0], [-3.0], [4.0]])
    with pytest.raises(ExprDomainError) as info:
        ex.evaluate_batch(ex.parse("log(x1)"), pts)
    assert tuple(info.value.point) == (-3.0,)


def test_derivative_of_product():
    d = ex.differentiate(ex.parse("x1^2*x2"), 1)
    assert ex.evaluate(d, [3.0, 4.0]) == pytest.approx(24.0, abs=1e-13)


def test_derivative_without_dependence_is_constant_zero():
    assert ex.differentiate(ex.parse("sin(x1)"), 2) == ex.Num(0.0)


def test_derivative_of_sin_squared_against_finite_difference():
    e = ex.parse("sin(x1)^2")
    symbolic = ex.evaluate(ex.differentiate(e, 1), [math.pi / 4])
    oracle = central_difference(lambda p: math.sin(p[0]) ** 2, [math.pi / 4], 0, h=1e-5)
    assert abs(symbolic - oracle) < 1e-9
    assert symbolic == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize(
    "source, point",
    [("tan(x1)", [0.3]), ("log(x1*x2)", [0.7, 2.0]), ("sqrt(1 + x1^2)", [0.4]), ("abs(x1)*x2", [-0.5, 3.0]),
     ("x1/x2", [1.0, 3.0]), ("exp(-x1)*cos(x2)", [0.2, 0.9]), ("(x1^2 + 1)^(1/3)", [0.8]), ("x1^-2", [1.7])],
)
def test_derivative_rules_against_finite_differences(source, point):
    assert ex.gradient_check(ex.parse(source), point, 1e-5) < 1e-8


def test_gradient_check_bilinear():
    for p in ([0.3, -1.2], [0.5, 0.7], [-1.0, 0.0]):
        assert ex.gradient_check(ex.parse("x1*x2"), p, 1e-5) < 1e-10


def test_gradient_check_exp():
    assert ex.gradient_check(ex.parse("exp(x1)"), [1.0], 1e-4) < 1e-7


def test_gradient_check_constant():
    assert ex.gradient_check(ex.parse("7"), [0.0], 0.3) <= 1e-15


def test_differentiate_rejects_bad_index():
    with pytest.raises(ValueError):
        ex.differentiate(ex.parse("x1"), 0)


def test_constant_folding_of_literal_subtrees():
    d = ex.differentiate(ex.parse("(2*3)*x1"), 1)
    assert d == ex.Num(6.0)


def test_substitute_and_variables():
    e = ex.parse("x1*x3 + sin(x3)")
    assert ex.variables(e) == {1, 3}
    s = ex.substitute(e, 3, ex.Num(0.0))
    assert ex.variables(s) == {1}
    assert ex.evaluate(s, [2.0]) == 0.0


@settings(max_examples=200, deadline=None)
@given(any_exprs())
def test_print_parse_round_trip(tree):
    source = ex.to_source(tree)
    assert ex.parse(source) == tree
    assert ex.parse(ex.to_source(ex.parse(source))) == ex.parse(source)


@settings(max_examples=60, deadline=None)
@given(smooth_exprs(), smooth_exprs(), st.floats(-3.0, 3.0, allow_nan=False), st.integers(1, 3))
def test_differentiation_is_linear(a, b, c, k):
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1.0, 1.0, size=(100, 3))
    combo = ex.differentiate(ex.BinOp("+", a, ex.BinOp("*", ex.Num(c), b)), k)
    lhs = ex.evaluate_batch(combo, pts)
    rhs = ex.evaluate_batch(ex.differentiate(a, k), pts) + c * ex.evaluate_batch(ex.differentiate(b, k), pts)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * max(1.0, float(np.max(np.abs(rhs)))))


@settings(max_examples=60, deadline=None)
@given(smooth_exprs(dim=2, max_leaves=8))
def test_symbolic_gradient_matches_finite_differences(tree):
    rng = np.random.default_rng(1)
    for p in rng.uniform(-0.5, 0.5, size=(3, 2)):
        scale = max(1.0, abs(ex.evaluate(tree, p)))
        assert ex.gradient_check(tree, p, 1e-5) < 1e-5 * scale
