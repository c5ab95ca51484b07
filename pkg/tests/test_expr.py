import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixlab.expr import (
    Binary,
    Call,
    EvaluationError,
    ExpressionError,
    Name,
    Num,
    Unary,
    UnknownIdentifier,
    parse_expression,
    to_text,
)


class TestExamples:
    def test_constant(self):
        e = parse_expression("1")
        assert e.variables == frozenset()
        np.testing.assert_array_equal(e(np.linspace(0, 1, 5), np.arange(5.0)), 1.0)

    def test_sublinear_nonlinearity(self):
        e = parse_expression("1+abs(u)^0.5")
        assert float(e(0.2, 4.0)) == 3.0
        assert e.variables == {"u"}

    def test_sine_with_pi(self):
        assert float(parse_expression("sin(pi*x)")(0.5)) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize(
        "text,value",
        [
            ("2^3^2", 512.0),
            ("-2^2", -4.0),
            ("(-2)^2", 4.0),
            ("2^-1", 0.5),
            ("1 - 2 - 3", -4.0),
            ("8 / 4 / 2", 1.0),
            ("1 + 2 * 3", 7.0),
            ("min(3, x, 2)", 1.0),
            ("max(u, 0)", 0.0),
            ("exp(0) + log(e) + sqrt(4) + cos(0)", 5.0),
            ("1.5e2 + .5", 150.5),
            ("--x", 1.0),
        ],
    )
    def test_precedence(self, text, value):
        assert float(parse_expression(text)(1.0, -1.0)) == pytest.approx(value, rel=1e-15)

    def test_broadcast_shape(self):
        out = parse_expression("x + u")(np.zeros(4), 1.0)
        assert out.shape == (4,)
        out = parse_expression("2")(np.zeros(3))
        assert out.shape == (3,)

    def test_deterministic(self):
        e = parse_expression("sin(7*x)*exp(-u^2) + abs(x - u)")
        x = np.linspace(-1, 1, 101)
        np.testing.assert_array_equal(e(x, x[::-1]), e(x, x[::-1]))


class TestSyntaxErrors:
    @pytest.mark.parametrize(
        "text,offset",
        [("1 +", 3), ("(x", 2), ("x )", 2), ("2 $ 3", 2), ("", 0), ("sin(x", 5), ("x y", 2), ("é", 0), ("x\u00a0+ #", 5)],
    )
    def test_offsets(self, text, offset):
        with pytest.raises(ExpressionError) as info:
            parse_expression(text)
        assert info.value.offset == offset

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifier) as info:
            parse_expression("1 + y")
        assert info.value.name == "y"
        assert info.value.offset == 4

    def test_unknown_function(self):
        with pytest.raises(UnknownIdentifier) as info:
            parse_expression("tan(x)")
        assert info.value.name == "tan"

    @pytest.mark.parametrize("text", ["sin(x, u)", "min(x)", "abs()", "sqrt"])
    def test_arity(self, text):
        with pytest.raises(ExpressionError):
            parse_expression(text)

    def test_overflowing_literal(self):
        with pytest.raises(ExpressionError):
            parse_expression("1e999")


class TestDomainErrors:
    @pytest.mark.parametrize(
        "text,x,u",
        [
            ("log(x)", 0.0, 0.0),
            ("log(u)", 1.0, -2.0),
            ("sqrt(u)", 1.0, -1.0),
            ("1/x", 0.0, 0.0),
            ("u^0.5", 1.0, -4.0),
            ("x^-1", 0.0, 0.0),
            ("exp(u)", 0.0, 1e3),
            ("u * 1e308 * 10", 0.0, 1.0),
        ],
    )
    def test_raises(self, text, x, u):
        with pytest.raises(EvaluationError):
            parse_expression(text)(x, u)

    def test_integer_power_of_negative(self):
        assert float(parse_expression("u^3")(0.0, -2.0)) == -8.0

    def test_error_anywhere_in_array(self):
        e = parse_expression("log(x)")
        with pytest.raises(EvaluationError):
            e(np.array([1.0, 2.0, 0.0]))


# random syntax trees for the round trip
leaves = st.one_of(
    st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(Num),
    st.sampled_from(["x", "u", "pi", "e"]).map(Name),
)


def _extend(children):
    return st.one_of(
        st.builds(Unary, st.sampled_from(["-", "+"]), children),
        st.builds(Binary, st.sampled_from(["+", "-", "*", "/", "^"]), children, children),
        st.builds(lambda f, a: Call(f, (a,)), st.sampled_from(["abs", "sin", "cos", "exp", "log", "sqrt"]), children),
        st.builds(lambda f, a: Call(f, tuple(a)), st.sampled_from(["min", "max"]), st.lists(children, min_size=2, max_size=3)),
    )


trees = st.recursive(leaves, _extend, max_leaves=12)


class TestRoundTrip:
    @settings(max_examples=1000)
    @given(trees)
    def test_print_then_parse(self, tree):
        text = to_text(tree)
        assert parse_expression(text).tree == tree
        assert to_text(parse_expression(text).tree) == text

    def test_str_uses_minimal_parentheses(self):
        assert str(parse_expression("((1 + x)) * (u)")) == "(1.0 + x) * u"
        assert str(parse_expression("(2^3)^2")) == "(2.0^3.0)^2.0"
        assert str(parse_expression("2^(3^2)")) == "2.0^3.0^2.0"
        assert str(parse_expression("1 - (2 - 3)")) == "1.0 - (2.0 - 3.0)"
        assert str(parse_expression("-(x^2)")) == "-x^2.0"

    def test_equality_ignores_source_text(self):
        assert parse_expression("x+1") == parse_expression("(x) + 1.0")

    def test_num_rejects_negative(self):
        with pytest.raises(ValueError):
            Num(-1.0)
        with pytest.raises(ValueError):
            Num(math.inf)
