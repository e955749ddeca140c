import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ladderalg.expr import (OutsideFamilyError, ParseError, differentiate, evaluate, expr_equal,
                            parse, to_string)

PARAMS = {"a": 0.7, "b": -1.3, "c": 0.4, "k": 1.1, "alpha": 0.25}

coef = st.sampled_from(["1", "2", "-3", "1/2", "a", "b", "a*b", "alpha", "2*c"])
factor = st.sampled_from(["", "x", "x^2", "exp(c*x)", "exp(-c*x)", "sin(k*x)", "cos(k*x)",
                          "cos(2*k*x)", "x*sin(k*x)", "exp(c*x)*cos(k*x)"])


@st.composite
def expressions(draw):
    n = draw(st.integers(1, 4))
    parts = []
    for _ in range(n):
        c, f = draw(coef), draw(factor)
        parts.append(f"({c})*{f}" if f else f"({c})")
    return " + ".join(parts)


def _numeric(src: str, x: np.ndarray) -> np.ndarray:
    env = {"x": x, "exp": np.exp, "sin": np.sin, "cos": np.cos, **PARAMS}
    return eval(src.replace("^", "**"), {"__builtins__": {}}, env)


@given(expressions())
@settings(max_examples=60, deadline=None)
def test_print_parse_round_trip(src):
    e = parse(src)
    back = parse(to_string(e))
    assert expr_equal(e, back)
    assert to_string(back) == to_string(e)


@given(expressions())
@settings(max_examples=60, deadline=None)
def test_evaluation_matches_python(src):
    x = np.linspace(-1.5, 1.5, 7)
    np.testing.assert_allclose(evaluate(parse(src), x, PARAMS), _numeric(src, x), atol=1e-12)


@given(expressions())
@settings(max_examples=40, deadline=None)
def test_derivative_matches_central_difference(src):
    x = np.linspace(-1.0, 1.0, 5)
    d = 1e-5
    fd = (_numeric(src, x + d) - _numeric(src, x - d)) / (2 * d)
    got = evaluate(differentiate(parse(src)), x, PARAMS)
    np.testing.assert_allclose(got, fd, rtol=1e-6, atol=1e-6)


@given(expressions(), expressions())
@settings(max_examples=30, deadline=None)
def test_derivative_is_linear(s1, s2):
    a, b = parse(s1), parse(s2)
    assert expr_equal(differentiate(a + b), differentiate(a) + differentiate(b))


def test_product_to_sum_canonical_form():
    assert expr_equal(parse("2*sin(k*x)*cos(k*x)"), parse("sin(2*k*x)"))
    assert expr_equal(parse("sin(k*x)^2 + cos(k*x)^2"), parse("1"))
    assert (parse("x") - parse("x")).is_zero()


def test_single_denominator_base():
    e = parse("c3/(a*sin(k*x) + b*cos(k*x))^2")
    x = np.array([0.3, 0.9])
    vals = {"a": 1.0, "b": 0.0, "k": 1.0, "c3": 2.0}
    np.testing.assert_allclose(evaluate(e, x, vals), 2.0 / np.sin(x) ** 2)
    d = evaluate(differentiate(e), x, vals)
    np.testing.assert_allclose(d, -4.0 * np.cos(x) / np.sin(x) ** 3)


def test_greek_aliases():
    assert expr_equal(parse("α*x + λ"), parse("alpha*x + lambda"))


@pytest.mark.parametrize("src", ["sin(x^2)", "exp(x*x)", "1/(x + 1) + 1/(x + 2)", "x^(1/2)"])
def test_outside_family(src):
    with pytest.raises((OutsideFamilyError, ParseError)):
        parse(src)


def test_parse_error_offset():
    with pytest.raises(ParseError) as info:
        parse("x +* 2")
    assert info.value.offset == 3


def test_unknown_name():
    with pytest.raises(ParseError):
        parse("x + zeta")


def test_pt_potential_identity():
    # 1/cos^2 written through the half-angle form keeps its value
    e = parse("k^2*nu_pt*(nu_pt - 1)/cos(k*x)^2")
    x = np.array([0.1, 0.5])
    got = evaluate(e, x, {"k": 1.0, "nu_pt": 2.0})
    np.testing.assert_allclose(got, 2.0 / np.cos(x) ** 2)
    assert math.isclose(abs(got[0]), 2.0 / math.cos(0.1) ** 2)
