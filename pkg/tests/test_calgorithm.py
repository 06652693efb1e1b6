from fractions import Fraction

import gmpy2
import pytest

from conftest import SYSTEMS
from isochron.calgorithm import (
    UrabeClosedForm,
    assign_weights,
    check_sys_weighted_homogeneous,
    generate_sys,
    normalize_b20,
    normalize_condition,
    urabe_series_check,
    verify_candidate,
)
from isochron.catalog import family_ids, get_record, instantiate
from isochron.cli import load_system_document
from isochron.errors import NonPositiveK2, UnboundParameter, UnconventionalName
from isochron.exprparse import parse_poly
from isochron.lienard import PlanarField, PlanarSystem, reduce_to_lienard


def homogeneous(n):
    return PlanarSystem.case1(f"1 - a*x^{n - 1}", f"x + c*x^{n}", f"b*x^{n - 2}", ["a", "b", "c"])


def nonzero_urabe_family(n, b=1):
    return PlanarSystem.from_field(PlanarField.parse(f"-y + {2 * b}*x^{n - 1}*y", f"x + {b}*x^{n - 2}*y^2 - {b}*x^{n}"))


def catalog_system(fid):
    try:
        return instantiate(fid, {})
    except UnboundParameter:
        return instantiate(fid, get_record(fid).default_bindings())


def test_loud_first_coefficient():
    s = homogeneous(2)
    r = generate_sys(s, 3)
    assert r.urabe[1] == parse_poly("(a - 2*c - b)/3", ring=s.param_ring)


@pytest.mark.parametrize("n", [3, 4])
def test_higher_degree_first_coefficient_vanishes(n):
    assert generate_sys(homogeneous(n), 3).urabe[1].is_zero()


def test_conditions_are_normalized_and_ordered():
    r = generate_sys(homogeneous(2), 4)
    assert all(normalize_condition(c) == c for c in r.conditions)
    assert len(set(r.conditions)) == len(r.conditions)
    assert sorted(r.urabe) == [1, 3, 5, 7]


def test_truncation_too_small():
    with pytest.raises(ValueError):
        generate_sys(homogeneous(2), 4, truncation=9)
    with pytest.raises(ValueError):
        generate_sys(homogeneous(2), 0)


def test_verify_loud_nonzero_urabe_point():
    rep = verify_candidate(homogeneous(2), {"a": 2, "b": 1, "c": -1}, 5)
    assert rep.passed and rep.exact
    assert rep.urabe[1] == 1


def test_verify_abel_point():
    s = load_system_document(str(SYSTEMS / "abel9.yaml")).system
    point = {f"a{i}": 0 for i in range(1, 10)}
    point.update(a1=2, a2=Fraction(4, 3), a3=Fraction(8, 27))
    rep = verify_candidate(s, point, 6)
    assert rep.passed
    assert (rep.urabe[1], rep.urabe[3], rep.urabe[5]) == (Fraction(-2, 3), 0, 0)


def test_verify_non_loud_point_fails():
    rep = verify_candidate(homogeneous(2), {"a": 1, "b": 0, "c": 0}, 3)
    assert not rep.passed and rep.max_residual() > 0


def test_verify_needs_every_parameter():
    with pytest.raises(UnboundParameter):
        verify_candidate(homogeneous(2), {"a": 1}, 3)


def test_verify_with_bigfloat_constant():
    # x' = -y, y' = x (1 + q y)^3 with q the bigfloat sqrt(33)/sqrt(33)
    s = PlanarSystem.case2("3*q*y + 3*q^2*y^2 + q^3*y^3", ["q"])
    q = gmpy2.sqrt(gmpy2.mpfr(33)) / gmpy2.sqrt(gmpy2.mpfr(33))
    rep = verify_candidate(s, {"q": q}, 4)
    assert rep.passed and not rep.exact


def test_urabe_closed_form_nonzero_family():
    l = reduce_to_lienard(nonzero_urabe_family(4))
    assert urabe_series_check(l, UrabeClosedForm(1, 1, 1, 3), 40)
    assert not urabe_series_check(l, UrabeClosedForm(-1, 1, 1, 3), 40)


def test_urabe_closed_form_zero_family():
    l = reduce_to_lienard(PlanarSystem.case1("1 - a*x^3", "x", "a*x^2", ["a"]))
    assert urabe_series_check(l, UrabeClosedForm(0, 1, 0, 1), 24)


def test_urabe_closed_form_scales_k2():
    # h = 2X^3 / sqrt(4 + 4X^6) is the same function as X^3 / sqrt(1 + X^6)
    l = reduce_to_lienard(nonzero_urabe_family(4))
    assert urabe_series_check(l, UrabeClosedForm(2, 4, 4, 3), 30)


def test_urabe_closed_form_rejects_bad_k2():
    l = reduce_to_lienard(nonzero_urabe_family(4))
    with pytest.raises(NonPositiveK2):
        urabe_series_check(l, UrabeClosedForm(1, -1, 1, 3), 30)


def test_assign_weights_examples():
    assert assign_weights(["a21", "b02", "c5", "b_{2,0}"]) == {"a21": 2, "b02": 1, "c5": 5, "b_{2,0}": 1}
    with pytest.raises(UnconventionalName):
        assign_weights(["alpha"])


def test_weighted_homogeneity_examples():
    w = {"a21": 2, "b12": 2, "b30": 2, "a11": 1, "b20": 1, "b02": 1}
    s = load_system_document(str(SYSTEMS / "degree4.yaml")).system
    P2 = parse_poly("3*a21 - 3*b12 + a11^2 - b20*a11 - 9*b30 + 4*b02^2 - 5*a11*b02 + 10*b20^2 + 10*b20*b02", ring=s.param_ring)
    assert check_sys_weighted_homogeneous([P2], w)
    assert not check_sys_weighted_homogeneous([parse_poly("a11 + b30", ring=s.param_ring)], w)


def test_homogeneous_subfamily_conditions_are_homogeneous():
    for n in (2, 3, 4):
        for c in generate_sys(homogeneous(n), 4).conditions:
            degs = {sum(e) for e, _ in c.terms()}
            assert len(degs) == 1


def test_normalize_b20_rational_scale():
    s = PlanarSystem.from_field(PlanarField.parse("-y + 6*x*y", "x + 2*x^2 + 4*y^2"))
    norm = normalize_b20(s)
    fld = norm.system.field()
    assert fld.xdot == parse_poly("-y + 3*x*y", ring=fld.ring)
    assert fld.ydot == parse_poly("x + x^2 + 2*y^2", ring=fld.ring)
    again = normalize_b20(norm.system)
    assert again.system == norm.system


def test_normalize_b20_symbolic_round_trip():
    s = load_system_document(str(SYSTEMS / "degree4.yaml")).system
    norm = normalize_b20(s)
    assert "b20" not in norm.system.params
    point = {"a11": Fraction(3), "a21": Fraction(5), "b20": Fraction(2), "b30": Fraction(-4)}
    assert norm.pull(norm.push(point), point["b20"]) == point


@pytest.mark.parametrize("fid", family_ids())
def test_truncation_insensitive_and_nested(fid):
    s = catalog_system(fid)
    r4 = generate_sys(s, 4, cross_check=True)
    r5 = generate_sys(s, 5)
    assert set(r4.conditions) <= set(r5.conditions)
    assert all(r5.urabe[k] == v for k, v in r4.urabe.items())


ZERO_URABE = [f for f in family_ids() if get_record(f).urabe == "zero" and not get_record(f).constants]


@pytest.mark.parametrize("fid", ZERO_URABE)
def test_zero_urabe_families_have_vanishing_coefficients(fid):
    r = generate_sys(catalog_system(fid), 6)
    assert r.conditions == []
    assert all(v.is_zero() for v in r.urabe.values())


def test_second_degree_four_condition_matches_printed_one_modulo_first():
    from test_acceptance import P2_TEXT, P3_TEXT

    from isochron.groebner import buchberger, normal_form
    from isochron.polyalg import primitive_part

    s = load_system_document(str(SYSTEMS / "degree4.yaml")).system
    conds = generate_sys(s, 4).conditions
    P2 = parse_poly(P2_TEXT, ring=s.param_ring)
    P3 = parse_poly(P3_TEXT, ring=s.param_ring)
    assert conds[0] == P2
    gb = buchberger([P2])
    assert primitive_part(normal_form(conds[1], gb)) == primitive_part(normal_form(P3, gb))
