import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adveig import expr as ex


@pytest.mark.parametrize(
    "src, x, y, expected",
    [
        ("1 + 2 * 3", 0.0, None, 7.0),
        ("(1 + 2) * 3", 0.0, None, 9.0),
        ("2 ^ 3 ^ 2", 0.0, None, 512.0),
        ("-2 ^ 2", 0.0, None, -4.0),
        ("2 ^ -1", 0.0, None, 0.5),
        ("8 / 4 / 2", 0.0, None, 1.0),
        ("1 - 2 - 3", 0.0, None, -4.0),
        ("sin(pi * x)", 0.5, None, 1.0),
        ("cos(pi*x)*sin(pi*y)", 0.0, 0.5, 1.0),
        ("exp(log(3))", 0.0, None, 3.0),
        ("sqrt(abs(-16))", 0.0, None, 4.0),
        ("1.5e2 + .5", 0.0, None, 150.5),
        ("x*y", 3.0, 4.0, 12.0),
    ],
)
def test_evaluate_scalars(src, x, y, expected):
    assert ex.evaluate(ex.compile_expr(src), x, y) == pytest.approx(expected, rel=1e-14, abs=1e-15)


def test_scalar_in_float_out():
    out = ex.evaluate(ex.compile_expr("x + 1"), 2.0)
    assert isinstance(out, float)


def test_array_evaluation_broadcasts_constants():
    x = np.linspace(0, 1, 5)
    out = ex.evaluate(ex.compile_expr("3"), x)
    assert out.shape == (5,)
    assert np.all(out == 3.0)
    X, Y = np.meshgrid(x, x, indexing="ij")
    out = ex.evaluate(ex.compile_expr("x - y"), X, Y)
    np.testing.assert_array_equal(out, X - Y)


@pytest.mark.parametrize(
    "src, err",
    [
        ("1 + $", ex.IllegalCharacter),
        ("(1 + 2", ex.UnbalancedParentheses),
        ("1 + 2)", ex.ExprError),
        ("foo(x)", ex.UnknownFunction),
        ("1 2", ex.ExprError),
        ("", ex.UnexpectedToken),
        ("1 +", ex.UnexpectedToken),
        ("z", ex.ExprError),
    ],
)
def test_parse_errors(src, err):
    with pytest.raises(err):
        ex.compile_expr(src)


def test_illegal_character_reports_offset():
    with pytest.raises(ex.IllegalCharacter) as info:
        ex.compile_expr("x + #")
    assert info.value.offset == 4
    assert info.value.char == "#"


@pytest.mark.parametrize(
    "src, x",
    [("log(x)", 0.0), ("sqrt(x)", -1.0), ("1/x", 0.0), ("x^0.5", -2.0), ("x^-1", 0.0), ("exp(x)", 1e4)],
)
def test_domain_errors(src, x):
    with pytest.raises(ex.DomainError):
        ex.evaluate(ex.compile_expr(src), x)


def test_missing_y():
    with pytest.raises(ex.MissingVariable):
        ex.evaluate(ex.compile_expr("x + y"), 1.0)


def test_variables():
    assert ex.variables(ex.compile_expr("sin(pi*x) + 2")) == {"x"}
    assert ex.variables(ex.compile_expr("x*y")) == {"x", "y"}
    assert ex.variables(ex.compile_expr("pi")) == frozenset()


def test_errors_are_value_errors():
    assert issubclass(ex.ExprError, ValueError)


_atoms = st.one_of(
    st.floats(min_value=0, max_value=1e6, allow_nan=False).map(repr),
    st.sampled_from(["x", "y", "pi"]),
)


def _combine(children):
    return st.one_of(
        st.tuples(children, st.sampled_from("+-*/"), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
        st.tuples(st.sampled_from(["sin", "cos", "abs"]), children).map(lambda t: f"{t[0]}({t[1]})"),
        children.map(lambda c: f"-{c}"),
    )


_exprs = st.recursive(_atoms, _combine, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(_exprs)
def test_to_source_round_trip(src):
    node = ex.compile_expr(src)
    again = ex.compile_expr(ex.to_source(node))
    assert again == node
    assert ex.to_source(again) == ex.to_source(node)


@settings(max_examples=200, deadline=None)
@given(_exprs, st.floats(-2, 2), st.floats(-2, 2))
def test_round_trip_preserves_value(src, x, y):
    node = ex.compile_expr(src)
    try:
        a = ex.evaluate(node, x, y)
    except ex.DomainError:
        return
    b = ex.evaluate(ex.compile_expr(ex.to_source(node)), x, y)
    assert a == b or (math.isnan(a) and math.isnan(b))
