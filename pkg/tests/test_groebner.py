import random

import pytest

from isochron.errors import ResourceLimit, VariableContextMismatch
from isochron.exprparse import parse_poly
from isochron.groebner import buchberger, is_reduced, normal_form, satisfies_buchberger_criterion
from isochron.polyalg import LEX, PolyRing

XY = PolyRing(("x", "y"))
XYZ = PolyRing(("x", "y", "z"))


def P(text, ring=XY):
    return parse_poly(text, ring=ring)


def test_single_generator():
    assert buchberger([P("x")]).generators == (P("x"),)


def test_circle_and_line():
    gb = buchberger([P("x^2 + y^2 - 1"), P("x - y")])
    assert set(gb.generators) == {P("x - y"), P("2*y^2 - 1")}


def test_unit_ideal():
    gb = buchberger([P("x*y - 1"), P("x^2")])
    assert gb.is_unit_ideal()


def test_normal_form_examples():
    assert normal_form(P("x^2 - y^2"), buchberger([P("x - y")])).is_zero()
    assert normal_form(P("x"), buchberger([P("y")])) == P("x")


def test_lex_elimination():
    gb = buchberger([P("x^2 + y^2 - 1", XYZ), P("x - y", XYZ)], LEX)
    last = gb.generators[0]
    assert "x" not in last.variables()


def test_mismatched_rings():
    with pytest.raises(VariableContextMismatch):
        buchberger([P("x"), P("x", XYZ)])


def test_resource_caps():
    gens = [P("x^3*y - z^2", XYZ), P("y^3*z - x^2", XYZ), P("z^3*x - y^2", XYZ)]
    with pytest.raises(ResourceLimit):
        buchberger(gens, max_pairs=2)
    with pytest.raises(ResourceLimit):
        buchberger(gens, max_degree=4)


def random_ideal(rng, ring):
    gens = []
    for _ in range(rng.randint(2, 3)):
        terms = {}
        for _ in range(rng.randint(2, 4)):
            while True:
                exp = tuple(rng.randint(0, 3) for _ in ring.names)
                if sum(exp) <= 3:
                    break
            terms[exp] = rng.randint(-5, 5) or 1
        gens.append(ring.from_terms(terms))
    return gens


def _ideals():
    rng = random.Random(20240531)
    out = []
    for k in range(20):
        ring = PolyRing(("x", "y", "z")[: 2 + k % 2])
        out.append(random_ideal(rng, ring))
    return out


@pytest.mark.parametrize("gens", _ideals(), ids=[f"ideal{k}" for k in range(20)])
def test_random_ideal_post_hoc(gens):
    gb = buchberger(gens)
    assert satisfies_buchberger_criterion(gb)
    assert is_reduced(gb)
    # same ideal: generators reduce to zero, and the basis lies in a recomputed basis
    assert all(normal_form(g, gb).is_zero() for g in gens)
    again = buchberger(list(gb.generators) + gens[:1])
    assert all(again.contains(g) for g in gb.generators)
    assert buchberger(gens).generators == gb.generators
