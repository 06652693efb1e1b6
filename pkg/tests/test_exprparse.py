from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isochron.errors import (
    DomainError,
    ExpressionSyntaxError,
    MalformedRationalExponent,
    NegativeExponent,
    UnboundVariableInNumericMode,
    UnknownVariable,
)
from isochron.exprparse import default_ring, parse_extended, parse_poly, parse_rational, tokenize
from isochron.polyalg import format_poly

RING = default_ring(("a", "b20"))


def test_simple_polynomial():
    p = parse_poly("x^2 + 2*x*y")
    assert p.to_dict() == {(2, 0): 1, (1, 1): 2}


def test_parameter_coefficient():
    p = parse_poly("-y + a*x*y", ["a"])
    assert p.coefficient((0, 1, 0)) == -1
    assert p.coefficient((1, 1, 1)) == 1
    assert len(p) == 2


def test_negative_exponent_rejected():
    with pytest.raises(NegativeExponent):
        parse_poly("x^(-1)")


def test_unknown_variable():
    with pytest.raises(UnknownVariable):
        parse_poly("x + z")


def test_implicit_multiplication_is_an_error():
    with pytest.raises(ExpressionSyntaxError):
        parse_poly("2x")


def test_decimal_rejected_in_polynomial_grammar():
    with pytest.raises(ExpressionSyntaxError):
        parse_poly("0.5*x")


def test_rational_literals_are_exact():
    assert parse_poly("1/3*x").coefficient((1, 0)) == Fraction(1, 3)
    assert parse_poly("x/3 - 2/6*x").is_zero()


def test_error_position_is_one_based_line_and_column():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_poly("x +\n  * y")
    assert (info.value.line, info.value.column) == (2, 3)
    assert str(info.value).startswith("2:3:")


def test_multichar_parameter_names():
    p = parse_poly("b20*x^2", ring=RING)
    assert p.variables() == ("x", "b20")


def test_tokenize_reports_kinds():
    kinds = [t.kind for t in tokenize("a*x^2")]
    assert kinds[:3] == ["name", "op", "name"]


def test_extended_first_integral_value():
    e = parse_extended("x^2 + y^2/(1+y)^2")
    assert e.evaluate({"x": 1, "y": 1}) == gmpy2.mpfr("1.25")


def test_extended_sqrt():
    assert parse_extended("sqrt(1+0)").evaluate({"x": 0.3}) == 1


def test_extended_pole_is_domain_error():
    with pytest.raises(DomainError):
        parse_extended("y/(1+y)").evaluate({"y": -1})


def test_extended_branch_cut_is_domain_error():
    with pytest.raises(DomainError):
        parse_extended("sqrt(x)").evaluate({"x": -1})


def test_extended_rational_exponent_and_decimal():
    e = parse_extended("x^(1/3) + 0.5")
    assert abs(e.evaluate({"x": 8}) - gmpy2.mpfr("2.5")) < 1e-70


def test_extended_malformed_exponent():
    with pytest.raises(MalformedRationalExponent):
        parse_extended("x^(y)").evaluate({"x": 2, "y": 1})


def test_extended_unbound_name_in_compile():
    with pytest.raises(UnboundVariableInNumericMode):
        parse_extended("x + q").compile(("x", "y"))


def test_compiled_float_matches_bigfloat():
    e = parse_extended("tan(x) - arctan(y) + sqrt(1 + x^2)")
    f = e.compile(("x", "y"))
    assert abs(f(0.3, 0.7) - float(e.evaluate({"x": "0.3", "y": "0.7"}))) < 1e-14


def test_parse_rational_keeps_denominator():
    r = parse_rational("x/(1 - a*x)", ["a"])
    assert not r.is_polynomial()
    assert r.evaluate({"x": 1, "y": 0, "a": 3}) == Fraction(-1, 2)


# -- round trip ---------------------------------------------------------------

NAMES = ("x", "y", "a", "b20")
coeffs = st.fractions(min_value=-50, max_value=50, max_denominator=12)
exps = st.tuples(*[st.integers(0, 4) for _ in NAMES])
polys = st.dictionaries(exps, coeffs, max_size=8).map(RING.from_terms)


@settings(max_examples=1000)
@given(polys)
def test_print_parse_round_trip(p):
    assert parse_poly(format_poly(p), ring=RING) == p
