import math

import numpy as np
import pytest

from viscokern.expressions import (
    EvalError,
    ParseError,
    evaluate,
    is_zero,
    parse,
    to_source,
    variables,
)


class TestPrecedence:
    def test_documented_vectors(self):
        # the fixed conventions: ^ strongest and right-associative, unary
        # minus binds looser than ^, then * /, then + -
        vectors = {
            "1+2*3": 7.0,
            "2^3^2": 512.0,
            "-2^2": -4.0,
            "2*3+4": 10.0,
            "2+3*4^2": 50.0,
            "-2*3": -6.0,
            "(1+2)*3": 9.0,
            "2^-1": 0.5,
            "6/3/2": 1.0,  # left associative
            "1-2-3": -4.0,
        }
        for source, expected in vectors.items():
            assert evaluate(parse(source)) == expected, source

    def test_pi_and_functions(self):
        assert evaluate(parse("sin(pi*x)"), x=0.5) == pytest.approx(1.0)
        assert evaluate(parse("exp(0)")) == 1.0
        assert evaluate(parse("cos(t)*sin(pi*x)"), x=0.5, t=0.0) == pytest.approx(1.0)
        assert evaluate(parse("x*t"), x=2.0, t=3.0) == 6.0
        assert evaluate(parse("abs(-3)")) == 3.0
        assert evaluate(parse("sqrt(4)")) == 2.0

    def test_scientific_literals(self):
        assert evaluate(parse("1.5e-3")) == 1.5e-3
        assert evaluate(parse("2.E2")) == 200.0
        assert evaluate(parse(".5")) == 0.5


class TestErrors:
    def test_syntax_error_offset(self):
        with pytest.raises(ParseError) as exc:
            parse("1 + * 2")
        assert exc.value.offset == 4

    def test_unknown_identifier(self):
        with pytest.raises(ParseError, match="unknown identifier"):
            parse("2*y")

    def test_trailing_garbage(self):
        with pytest.raises(ParseError):
            parse("1+2)")

    def test_unclosed_call(self):
        with pytest.raises(ParseError, match="expected"):
            parse("sin(x")

    def test_empty_input(self):
        with pytest.raises(ParseError):
            parse("")

    def test_unexpected_character(self):
        with pytest.raises(ParseError) as exc:
            parse("1 + $")
        assert exc.value.offset == 4

    def test_division_by_zero_position(self):
        expr = parse("1 + x/t")
        with pytest.raises(EvalError) as exc:
            evaluate(expr, x=1.0, t=0.0)
        assert exc.value.offset == 5

    def test_sqrt_negative_position(self):
        expr = parse("2*sqrt(x)")
        with pytest.raises(EvalError) as exc:
            evaluate(expr, x=-1.0)
        assert exc.value.offset == 2

    def test_overflow(self):
        with pytest.raises(EvalError, match="overflow"):
            evaluate(parse("exp(x)"), x=1e6)

    def test_fractional_power_of_negative(self):
        with pytest.raises(EvalError):
            evaluate(parse("x^0.5"), x=-2.0)


class TestRoundTrip:
    SOURCES = [
        "sin(pi*x)*cos(t)",
        "1+2*3-x/t",
        "2^3^2",
        "-x^2 + sqrt(abs(t))",
        "exp(-2*t)*(1 - x)",
        "x*(1-x)*exp(x)",
    ]

    def test_parse_print_parse_idempotence(self):
        rng = np.random.default_rng(909)
        points = rng.uniform(-2.0, 2.0, size=(100, 2))
        for source in self.SOURCES:
            first = parse(source)
            second = parse(to_source(first))
            for x, t in points:
                try:
                    a = evaluate(first, x=x, t=t)
                except EvalError:
                    continue
                assert evaluate(second, x=x, t=t) == a


def test_variables():
    assert variables(parse("sin(pi*x)")) == {"x"}
    assert variables(parse("x*t + 1")) == {"x", "t"}
    assert variables(parse("3*pi")) == set()


def test_is_zero():
    assert is_zero(parse("0"))
    assert is_zero(parse("0.0"))
    assert not is_zero(parse("0*x"))
    assert not is_zero(parse("1"))
