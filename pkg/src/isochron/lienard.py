"""Reducible planar systems, their Liénard form and exact vector-field checks.

Two system shapes are supported:

* ``case1``: x' = -y*A(x),  y' = B(x) + C(x)*y^2   with A(0)=1, B = x + O(x^2);
* ``case2``: x' = -y,       y' = x*(1 + P(y))       with P(0)=0.

Both reduce to x'' + f(x) x'^2 + g(x) = 0. The functions f and g are kept
as exact fractions; their expansions live in a :class:`SeriesBundle`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping

from .errors import MalformedSystem, MismatchedBase, ZeroV
from .exprparse import RationalFunction, parse_poly
from .polyalg import ParamPoly, PolyRing, as_rational
from .powerseries import (
    TruncatedSeries,
    series_differentiate,
    series_exp,
    series_integrate,
    series_mul,
    series_recip,
    series_sqrt_unit,
)

CASE1 = "case1"
CASE2 = "case2"
STATE = ("x", "y")


def system_ring(params) -> PolyRing:
    return PolyRing(STATE + tuple(params))


def param_ring_of(ring: PolyRing) -> PolyRing:
    return PolyRing(tuple(n for n in ring.names if n not in STATE))


def common_ring(*polys: ParamPoly) -> PolyRing:
    """Smallest ring containing x, y and every variable of ``polys`` (in first-seen order)."""
    names = list(STATE)
    for p in polys:
        for n in p.ring.names:
            if n not in names:
                names.append(n)
    return PolyRing(names)


def _only_in(p: ParamPoly, var: str) -> bool:
    other = "y" if var == "x" else "x"
    return other not in p.ring.index or p.degree(other) <= 0


def _divide_by(p: ParamPoly, var: str) -> ParamPoly:
    """Exact division by a single variable; MalformedSystem if not divisible."""
    i = p.ring.index[var]
    terms = {}
    for exp, c in p.terms():
        if exp[i] == 0:
            raise MalformedSystem(f"{p} is not divisible by {var}")
        e = list(exp)
        e[i] -= 1
        terms[tuple(e)] = c
    return p.ring.from_terms(terms)


# ---------------------------------------------------------------------------
# vector fields


@dataclass(frozen=True)
class PlanarField:
    """Polynomial vector field (xdot, ydot) in the variables x, y."""

    xdot: ParamPoly
    ydot: ParamPoly

    def __post_init__(self):
        if self.xdot.ring is not self.ydot.ring:
            ring = common_ring(self.xdot, self.ydot)
            object.__setattr__(self, "xdot", self.xdot.to_ring(ring))
            object.__setattr__(self, "ydot", self.ydot.to_ring(ring))

    @classmethod
    def parse(cls, xdot: str, ydot: str, params=()) -> "PlanarField":
        ring = system_ring(params)
        return cls(parse_poly(xdot, ring=ring), parse_poly(ydot, ring=ring))

    @property
    def ring(self) -> PolyRing:
        return self.xdot.ring

    @property
    def params(self) -> tuple:
        return tuple(n for n in self.ring.names if n not in STATE)

    def to_ring(self, ring: PolyRing) -> "PlanarField":
        return PlanarField(self.xdot.to_ring(ring), self.ydot.to_ring(ring))

    def lie_derivative(self, z: ParamPoly) -> ParamPoly:
        """Derivative of ``z`` along the field: z_x * xdot + z_y * ydot."""
        ring = common_ring(self.xdot, z)
        z = z.to_ring(ring)
        return z.diff("x") * self.xdot.to_ring(ring) + z.diff("y") * self.ydot.to_ring(ring)

    def divergence(self) -> ParamPoly:
        return self.xdot.diff("x") + self.ydot.diff("y")

    def subs(self, bindings: Mapping) -> "PlanarField":
        return PlanarField(self.xdot.subs(bindings), self.ydot.subs(bindings))

    def is_zero(self) -> bool:
        return self.xdot.is_zero() and self.ydot.is_zero()

    def __str__(self):
        return f"x' = {self.xdot}\ny' = {self.ydot}"


def lie_bracket(X: PlanarField, Y: PlanarField) -> PlanarField:
    """[X, Y] = (DY) X - (DX) Y."""
    ring = common_ring(X.xdot, Y.xdot)
    X, Y = X.to_ring(ring), Y.to_ring(ring)
    comps = []
    for xi, yi in ((X.xdot, Y.xdot), (X.ydot, Y.ydot)):
        comps.append(
            yi.diff("x") * X.xdot + yi.diff("y") * X.ydot - xi.diff("x") * Y.xdot - xi.diff("y") * Y.ydot
        )
    return PlanarField(*comps)


def check_inverse_integrating_factor(V: ParamPoly, X: PlanarField) -> bool:
    """True iff X.grad(V) == V * div(X) identically."""
    if V.is_zero():
        raise ZeroV("inverse integrating factor must be nonzero")
    ring = common_ring(V, X.xdot)
    V, X = V.to_ring(ring), X.to_ring(ring)
    return (X.lie_derivative(V) - V * X.divergence()).is_zero()


# ---------------------------------------------------------------------------
# fractional-power first integrals and linearizations


@dataclass(frozen=True)
class PowerIntegral:
    """H = num / base^exponent."""

    num: ParamPoly
    base: ParamPoly
    exponent: Fraction = Fraction(1)


def check_power_integral(H: PowerIntegral, fld: PlanarField) -> bool:
    """Exact test that H is constant along ``fld``.

    With exponent p/q: q*D*N' - p*N*D' == 0 where ' is the Lie derivative.
    """
    e = as_rational(H.exponent)
    ring = common_ring(H.num, H.base, fld.xdot)
    n, d, fld = H.num.to_ring(ring), H.base.to_ring(ring), fld.to_ring(ring)
    lhs = d * fld.lie_derivative(n) * e.denominator - n * fld.lie_derivative(d) * e.numerator
    return lhs.is_zero()


@dataclass(frozen=True)
class PowerExpr:
    """coef * base^exponent, one component of a linearizing change."""

    coef: ParamPoly
    base: ParamPoly
    exponent: Fraction = Fraction(1)


def check_linearization(u: PowerExpr, v: PowerExpr, fld: PlanarField) -> bool:
    """Exact test that (u, v) conjugates ``fld`` to u' = -v, v' = u.

    For u = M*D^(p/q), v = N*D^(p/q):
    q*D*M' + p*M*D' + q*N*D == 0 and q*D*N' + p*N*D' - q*M*D == 0.
    """
    eu, ev = as_rational(u.exponent), as_rational(v.exponent)
    ring = common_ring(u.coef, u.base, v.coef, v.base, fld.xdot)
    if eu != ev or u.base.to_ring(ring) != v.base.to_ring(ring):
        raise MismatchedBase("u and v must share base and exponent")
    p, q = eu.numerator, eu.denominator
    M, N, D, fld = u.coef.to_ring(ring), v.coef.to_ring(ring), u.base.to_ring(ring), fld.to_ring(ring)
    Dd = fld.lie_derivative(D)
    first = D * fld.lie_derivative(M) * q + M * Dd * p + N * D * q
    second = D * fld.lie_derivative(N) * q + N * Dd * p - M * D * q
    return first.is_zero() and second.is_zero()


# ---------------------------------------------------------------------------
# reducible systems


@dataclass(frozen=True)
class PlanarSystem:
    """Reducible system in Case 1 (A, B, C polynomials in x) or Case 2 (P in y)."""

    shape: str
    ring: PolyRing
    A: ParamPoly | None = None
    B: ParamPoly | None = None
    C: ParamPoly | None = None
    P: ParamPoly | None = None
    name: str = field(default="", compare=False)
    # bigfloat values of parameters that stand for irrational constants
    constants: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.shape == CASE1:
            if self.A is None or self.B is None or self.C is None:
                raise MalformedSystem("case1 needs A, B and C")
            for label, p in (("A", self.A), ("B", self.B), ("C", self.C)):
                object.__setattr__(self, label, p.to_ring(self.ring))
                if not _only_in(p, "x"):
                    raise MalformedSystem(f"{label} must depend on x only, got {p}")
            if self.A.coeff_in("x", 0) != self.ring.one:
                raise MalformedSystem(f"A(0) must be 1, got {self.A.coeff_in('x', 0)}")
            if not self.B.coeff_in("x", 0).is_zero() or self.B.coeff_in("x", 1) != self.ring.one:
                raise MalformedSystem("B must be x + O(x^2)")
        elif self.shape == CASE2:
            if self.P is None:
                raise MalformedSystem("case2 needs P")
            object.__setattr__(self, "P", self.P.to_ring(self.ring))
            if not _only_in(self.P, "y"):
                raise MalformedSystem(f"P must depend on y only, got {self.P}")
            if not self.P.coeff_in("y", 0).is_zero():
                raise MalformedSystem("P(0) must be 0")
        else:
            raise MalformedSystem(f"unknown shape {self.shape!r}")

    # -- constructors ---------------------------------------------------------
    @classmethod
    def case1(cls, A, B, C, params=(), name="") -> "PlanarSystem":
        ring = system_ring(params)
        A, B, C = (parse_poly(t, ring=ring) if isinstance(t, str) else t for t in (A, B, C))
        ring = common_ring(A, B, C) if not params else ring
        return cls(CASE1, ring, A=A, B=B, C=C, name=name)

    @classmethod
    def case2(cls, P, params=(), name="") -> "PlanarSystem":
        ring = system_ring(params)
        P = parse_poly(P, ring=ring) if isinstance(P, str) else P
        ring = common_ring(P) if not params else ring
        return cls(CASE2, ring, P=P, name=name)

    @classmethod
    def from_field(cls, fld: PlanarField, name="", constants=None) -> "PlanarSystem":
        """Recognize Case 1 (preferred) or Case 2 shape of a polynomial field."""
        ring = common_ring(fld.xdot)
        fld = fld.to_ring(ring)
        y = ring.gen("y")
        try:
            A = -_divide_by(fld.xdot, "y")
            ydot = fld.ydot.collect("y")
            if _only_in(A, "x") and set(ydot) <= {0, 2}:
                B = ydot.get(0, ring.zero)
                C = ydot.get(2, ring.zero)
                return cls(CASE1, ring, A=A, B=B, C=C, name=name, constants=dict(constants or {}))
        except MalformedSystem:
            pass
        if fld.xdot == -y:
            try:
                P = _divide_by(fld.ydot, "x") - 1
                return cls(CASE2, ring, P=P, name=name, constants=dict(constants or {}))
            except MalformedSystem:
                pass
        raise MalformedSystem("shape not Case1/Case2: expected x' = -y*A(x), y' = B(x) + C(x)*y^2 or x' = -y, y' = x*(1+P(y))")

    # -- views ------------------------------------------------------------------
    @property
    def params(self) -> tuple:
        return tuple(n for n in self.ring.names if n not in STATE)

    @cached_property
    def param_ring(self) -> PolyRing:
        return param_ring_of(self.ring)

    def field(self) -> PlanarField:
        x, y = self.ring.gen("x"), self.ring.gen("y")
        if self.shape == CASE1:
            return PlanarField(-y * self.A, self.B + self.C * y * y)
        return PlanarField(-y, x * (1 + self.P))

    def specialize(self, bindings: Mapping) -> "PlanarSystem":
        """Substitute exact values for some parameters; the ring drops them."""
        bindings = {k: v for k, v in bindings.items() if k in self.ring.index}
        ring = PolyRing(tuple(n for n in self.ring.names if n not in bindings))
        sub = lambda p: p.subs(bindings).to_ring(ring) if p is not None else None  # noqa: E731
        consts = {k: v for k, v in self.constants.items() if k not in bindings}
        return PlanarSystem(self.shape, ring, sub(self.A), sub(self.B), sub(self.C), sub(self.P), self.name, consts)

    def with_ring(self, ring: PolyRing) -> "PlanarSystem":
        conv = lambda p: p.to_ring(ring) if p is not None else None  # noqa: E731
        return PlanarSystem(self.shape, ring, conv(self.A), conv(self.B), conv(self.C), conv(self.P), self.name, self.constants)

    def __str__(self):
        return str(self.field())


# ---------------------------------------------------------------------------
# Liénard form


@dataclass(frozen=True)
class SeriesBundle:
    """Expansions in x of the quantities attached to a Liénard equation."""

    order: int
    f: TruncatedSeries
    g: TruncatedSeries
    F: TruncatedSeries
    eF: TruncatedSeries
    e2F: TruncatedSeries
    phi: TruncatedSeries
    X: TruncatedSeries
    geF: TruncatedSeries


@dataclass(frozen=True)
class LienardForm:
    """x'' + f(x) x'^2 + g(x) = 0 with f, g exact fractions of polynomials in x."""

    f: RationalFunction
    g: RationalFunction
    system: PlanarSystem | None = None

    @property
    def ring(self) -> PolyRing:
        return self.f.num.ring

    @cached_property
    def param_ring(self) -> PolyRing:
        return param_ring_of(self.ring)

    def series(self, r: RationalFunction, order: int) -> TruncatedSeries:
        num = TruncatedSeries.from_poly(r.num, "x", order, self.param_ring)
        den = TruncatedSeries.from_poly(r.den, "x", order, self.param_ring)
        if den._c[0] == den.ring._ctx.constant(1) and all(c == 0 for c in den._c[1:]):
            return num
        return series_mul(num, series_recip(den))

    def bundle(self, order: int) -> SeriesBundle:
        return build_series_bundle(self, order)


def reduce_to_lienard(s: PlanarSystem) -> LienardForm:
    """f = (C - A')/A, g = A*B in Case 1; f = -P'/(1+P), g = x(1+P) in Case 2 (P taken in x)."""
    ring = s.ring
    one = ring.one
    if s.shape == CASE1:
        f = RationalFunction(s.C - s.A.diff("x"), s.A)
        g = RationalFunction(s.A * s.B, one)
    else:
        Px = s.P.subs({"y": ring.gen("x")})
        f = RationalFunction(-Px.diff("x"), 1 + Px)
        g = RationalFunction(ring.gen("x") * (1 + Px), one)
    return LienardForm(_reduce_fraction(f), g, s)


def _reduce_fraction(r: RationalFunction) -> RationalFunction:
    if r.num.is_zero():
        return RationalFunction(r.num, r.num.ring.one)
    return r


def build_series_bundle(l: LienardForm, order: int) -> SeriesBundle:
    if order < 4:
        raise ValueError("series bundle needs order >= 4")
    f = l.series(l.f, order)
    g = l.series(l.g, order)
    F = series_integrate(f).truncate(order)
    eF = series_exp(F)
    e2F = series_mul(eF, eF)
    phi = series_integrate(eF).truncate(order)
    # X^2 = 2*int(g e^{2F}) = x^2 * (1 + ...), so X = x * sqrt_unit(shifted)
    twice = series_integrate(series_mul(g, e2F)) * 2
    X = series_sqrt_unit(twice.shift(-2)).shift(1)
    geF = series_mul(g, eF)
    return SeriesBundle(order, f, g, F, eF, e2F, phi, X, geF)


def zero_urabe_conditions(s: PlanarSystem) -> list:
    """Parameter polynomials whose common vanishing is g' + f*g == 1.

    Case 1: coefficients in x of A*B' + C*B - 1; Case 2: coefficients of P.
    """
    if s.shape == CASE1:
        expr = s.A * s.B.diff("x") + s.C * s.B - 1
        var = "x"
    else:
        expr = s.P
        var = "y"
    coll = expr.collect(var)
    return [coll[k].to_ring(s.param_ring) for k in sorted(coll) if not coll[k].is_zero()]


def zero_urabe_residual(s: PlanarSystem) -> ParamPoly:
    """The polynomial that must vanish identically (A*B' + C*B - 1, or P)."""
    if s.shape == CASE1:
        return s.A * s.B.diff("x") + s.C * s.B - 1
    return s.P


@dataclass(frozen=True)
class EnergyIntegral:
    """I(x, v) = potential(x) + v^2 * kinetic(x), with v = x'."""

    potential: TruncatedSeries
    kinetic: TruncatedSeries

    def to_poly(self, ring: PolyRing | None = None, velocity: str = "v") -> ParamPoly:
        base = self.potential.ring
        ring = ring or PolyRing(("x", velocity) + base.names)
        v = ring.gen(velocity)
        return self.potential.to_poly(ring) + v * v * self.kinetic.to_poly(ring)

    def flow_derivative(self, l: LienardForm) -> tuple:
        """Series (a, b) with dI/dt = v*a(x) + v^3*b(x) along the Liénard flow."""
        order = min(self.potential.order, self.kinetic.order) - 1
        f = l.series(l.f, order)
        g = l.series(l.g, order)
        dpot = series_differentiate(self.potential).truncate(order)
        dkin = series_differentiate(self.kinetic).truncate(order)
        a = dpot - series_mul(g, self.kinetic.truncate(order)) * 2
        b = dkin - series_mul(f, self.kinetic.truncate(order)) * 2
        return a, b


def energy_first_integral(l: LienardForm, order: int) -> EnergyIntegral:
    """I = 2*int(g e^{2F}) + (x' e^F)^2 as series in x."""
    b = build_series_bundle(l, order)
    potential = (series_integrate(series_mul(b.g, b.e2F)) * 2).truncate(order)
    return EnergyIntegral(potential, b.e2F)


__all__ = [
    "CASE1",
    "CASE2",
    "EnergyIntegral",
    "LienardForm",
    "PlanarField",
    "PlanarSystem",
    "PowerExpr",
    "PowerIntegral",
    "SeriesBundle",
    "build_series_bundle",
    "check_inverse_integrating_factor",
    "check_linearization",
    "check_power_integral",
    "common_ring",
    "energy_first_integral",
    "lie_bracket",
    "reduce_to_lienard",
    "system_ring",
    "zero_urabe_conditions",
    "zero_urabe_residual",
]
