"""Necessary conditions of isochronicity by Taylor matching in the variable u = phi(x).

An isochronous center satisfies X / (1 + h(X)) = g e^F with an odd Urabe
function h(X) = c1 X + c3 X^3 + ...  Writing both sides as series in u:

* L(u) = (g e^F)(x(u)), with x(u) the compositional inverse of phi;
* R(u) = X(u) / (1 + h(X(u))), where R(1 + h(X)) = X gives
  R_j = X_j - sum_{i<j} D_i R_{j-i} with D = h(X).

c_{j-1} first enters R_j (j even) linearly, so even indices determine the
Urabe coefficients and odd indices j >= 3 leave conditions on the parameters.
Sys(m) collects the m conditions at j = 3, 5, ..., 2m+1.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import gmpy2

from .errors import (
    NonlinearCOccurrence,
    NonPositiveK2,
    TruncationSensitivity,
    UnboundParameter,
    UnconventionalName,
)
from .lienard import LienardForm, PlanarSystem, build_series_bundle, reduce_to_lienard
from .polyalg import (
    DEFAULT_PRECISION,
    ParamPoly,
    WeightMap,
    as_rational,
    bigfloat,
    is_bigfloat,
    precision,
    primitive_part,
    weighted_degree,
)
from .powerseries import (
    TruncatedSeries,
    series_compose_many,
    series_mul,
    series_recip,
    series_revert,
    series_sqrt_unit,
)

ELIMINATED = "eliminated"
CONDITION = "condition"
TRIVIAL = "trivial"

#: residual threshold for bigfloat verification
BIGFLOAT_TOLERANCE = gmpy2.mpfr("1e-40")


@dataclass(frozen=True)
class StepRecord:
    index: int
    kind: str
    lhs: ParamPoly
    payload: ParamPoly


@dataclass
class ConditionDerivation:
    order: int
    truncation: int
    lhs: TruncatedSeries
    X_of_u: TruncatedSeries
    records: list = field(default_factory=list)


@dataclass
class SysResult:
    """Output of :func:`generate_sys`.

    ``conditions`` is the normalized, deduplicated condition set;
    ``residuals`` maps each odd index to its raw (unnormalized) residual;
    ``urabe`` maps 2k+1 to c_{2k+1} as a parameter polynomial.
    """

    order: int
    conditions: list
    residuals: dict
    urabe: dict
    derivation: ConditionDerivation

    def first_nonzero(self, count: int = 1) -> list:
        return self.conditions[:count]


def normalize_condition(p: ParamPoly) -> ParamPoly:
    """Primitive part with positive leading coefficient (zero stays zero)."""
    if p.is_zero():
        return p
    return primitive_part(p)


def normalize_set(polys) -> list:
    """Normalize, drop zeros and rational multiples of earlier members."""
    out = []
    seen = set()
    for p in polys:
        q = normalize_condition(p)
        if q.is_zero() or q in seen:
            continue
        seen.add(q)
        out.append(q)
    return out


def generate_sys(s: PlanarSystem, m: int, truncation: int | None = None, cross_check: bool = False) -> SysResult:
    """Sys(m) and the Urabe coefficients c1, ..., c_{2m-1} of ``s``."""
    if m < 1:
        raise ValueError("order m must be >= 1")
    N = truncation if truncation is not None else 2 * m + 4
    if N < 2 * m + 2:
        raise ValueError(f"truncation {N} too small for m={m}")
    result = _run(s, m, N)
    if cross_check:
        other = _run(s, m, N + 2)
        if other.conditions != result.conditions or other.urabe != result.urabe:
            raise TruncationSensitivity(f"Sys({m}) differs between truncation {N} and {N + 2}")
    return result


def _run(s: PlanarSystem, m: int, N: int) -> SysResult:
    lien = reduce_to_lienard(s)
    bundle = build_series_bundle(lien, N)
    top = 2 * m + 1
    # coefficients above u^top never influence Sys(m)
    x_of_u = series_revert(bundle.phi.truncate(top + 1))
    L, Xu = series_compose_many([bundle.geF, bundle.X], x_of_u)
    ring = Xu.ring

    # odd powers of X(u); [X^l]_i vanishes for i < l
    powers = {1: Xu}
    X2 = series_mul(Xu, Xu)
    for l in range(3, 2 * m, 2):
        powers[l] = series_mul(powers[l - 2], X2)

    c: dict = {}
    D = [ring.zero] * (top + 1)
    R = [ring.zero] * (top + 1)
    derivation = ConditionDerivation(m, N, L, Xu)
    residuals = {}

    R[1] = Xu[1]
    if L[1] != R[1] or R[1] != ring.one:
        raise AssertionError(f"first coefficients must both be 1, got {L[1]} and {R[1]}")
    derivation.records.append(StepRecord(1, TRIVIAL, L[1], R[1]))

    for j in range(2, top + 1):
        # D_{j-1} is complete once c_{j-2} (j odd) or c_{j-1} (j even) is known
        known = Xu[j]
        for i in range(1, j):
            if i == j - 1 and j % 2 == 0:
                continue
            if not D[i].is_zero() and not R[j - i].is_zero():
                known = known - D[i] * R[j - i]
        if j % 2 == 0:
            l = j - 1
            partial = ring.zero
            for k in range(1, l, 2):
                partial = partial + c[k] * powers[k][l]
            # R_j = known - (partial + c_l*[X^l]_l) * R_1
            lin = powers[l][l] * R[1]
            if not lin.is_constant() or lin.is_zero():
                raise NonlinearCOccurrence(f"c{l} enters index {j} with coefficient {lin}")
            value = (known - partial * R[1] - L[j]) / lin.constant_value()
            c[l] = value
            D[l] = partial + value * powers[l][l]
            R[j] = L[j]
            derivation.records.append(StepRecord(j, ELIMINATED, L[j], value))
        else:
            l = j - 1
            # D_{j-1} with j-1 even only involves c_k with k < j-1, all known
            D[l] = ring.zero
            for k in range(1, l, 2):
                D[l] = D[l] + c[k] * powers[k][l]
            known = known - D[l] * R[1]
            R[j] = known
            residual = L[j] - known
            residuals[j] = residual
            derivation.records.append(StepRecord(j, CONDITION, L[j], residual))

    conditions = normalize_set(residuals[j] for j in sorted(residuals))
    return SysResult(m, conditions, residuals, c, derivation)


# ---------------------------------------------------------------------------
# candidate points


@dataclass
class VerifyReport:
    order: int
    passed: bool
    residuals: dict
    urabe: dict
    exact: bool

    def max_residual(self):
        vals = [abs(v) for v in self.residuals.values()]
        return max(vals) if vals else 0


def verify_candidate(s: PlanarSystem, point: Mapping, m: int, prec: int = DEFAULT_PRECISION) -> VerifyReport:
    """Evaluate Sys(m) and the Urabe coefficients at ``point``.

    Exact values are substituted into the system before the expansion;
    bigfloat values (algebraic constants) are substituted afterwards.
    """
    point = {**s.constants, **point}
    missing = [p for p in s.params if p not in point]
    if missing:
        raise UnboundParameter(f"no value for {missing}")
    exact = {k: as_rational(v) for k, v in point.items() if k in s.ring.index and not is_bigfloat(v)}
    floats = {k: v for k, v in point.items() if k in s.ring.index and is_bigfloat(v)}
    result = generate_sys(s.specialize(exact), m)
    if not floats:
        residuals = {j: r.constant_value() for j, r in result.residuals.items()}
        urabe = {k: v.constant_value() for k, v in result.urabe.items()}
        passed = all(r == 0 for r in residuals.values())
        return VerifyReport(m, passed, residuals, urabe, True)
    with precision(prec):
        residuals = {j: r.subs(floats, prec) if not r.is_constant() else bigfloat(r.constant_value(), prec) for j, r in result.residuals.items()}
        urabe = {k: v.subs(floats, prec) if not v.is_constant() else bigfloat(v.constant_value(), prec) for k, v in result.urabe.items()}
        passed = all(abs(r) < BIGFLOAT_TOLERANCE for r in residuals.values())
    return VerifyReport(m, passed, residuals, urabe, False)


# ---------------------------------------------------------------------------
# closed-form Urabe functions


@dataclass(frozen=True)
class UrabeClosedForm:
    """h(X) = k1 X^s / sqrt(k2 + k3 X^(2s)) with s odd and k2 > 0."""

    k1: object
    k2: object
    k3: object
    s: int


def _rational_sqrt(q: Fraction) -> Fraction | None:
    from math import isqrt

    n, d = q.numerator, q.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def urabe_series_check(l: LienardForm, h: UrabeClosedForm, order: int) -> bool:
    """Truncated-series test of X/(1+h(X)) = g e^F up to x^(order-1)."""
    if h.s < 1 or h.s % 2 == 0:
        raise ValueError("s must be a positive odd integer")
    if order < 2 * h.s + 2:
        raise ValueError(f"order must be at least {2 * h.s + 2}")
    k2 = as_rational(h.k2)
    if k2 <= 0:
        raise NonPositiveK2(f"k2 = {k2} must be positive")
    root = _rational_sqrt(k2)
    if root is None:
        raise NonPositiveK2(f"k2 = {k2} is not the square of a rational")
    ring = l.param_ring
    k1 = ring.coerce(h.k1) / root
    k3 = ring.coerce(h.k3) / k2
    b = build_series_bundle(l, order)
    X = b.X
    Xs = X ** h.s
    denom = series_sqrt_unit(Xs * Xs * k3 + 1)
    hX = series_mul(Xs * k1, series_recip(denom))
    lhs = series_mul(X, series_recip(hX + 1))
    return lhs == b.geF


# ---------------------------------------------------------------------------
# weights and normalization

_AB = re.compile(r"^([ab])_?(\d)(\d)$|^([ab])_?\{?(\d+),(\d+)\}?$")
_C = re.compile(r"^c_?(\d+)$")


def assign_weights(names) -> WeightMap:
    """Weight i+j-1 for a_ij, b_ij and 2i+1 for c_{2i+1}.

    Accepts a system or an iterable of parameter names.
    """
    if isinstance(names, PlanarSystem):
        names = names.params
    weights = {}
    for name in names:
        m = _AB.match(name)
        if m:
            i, j = (m.group(2), m.group(3)) if m.group(1) else (m.group(5), m.group(6))
            w = int(i) + int(j) - 1
            if w < 1:
                raise UnconventionalName(f"{name!r} has nonpositive weight")
            weights[name] = w
            continue
        m = _C.match(name)
        if m and int(m.group(1)) % 2 == 1:
            weights[name] = int(m.group(1))
            continue
        raise UnconventionalName(f"{name!r} does not follow the a_ij / b_ij / c_(2i+1) convention")
    return weights


def check_sys_weighted_homogeneous(conditions, w: WeightMap) -> bool:
    return all(weighted_degree(p, w).homogeneous for p in conditions)


@dataclass(frozen=True)
class Normalization:
    """Result of :func:`normalize_b20`; maps parameter values both ways."""

    system: PlanarSystem
    scale: object
    weights: dict

    def push(self, point: Mapping) -> dict:
        """Original parameter values -> normalized ones (b20 becomes 1)."""
        k = as_rational(point[self.scale]) if isinstance(self.scale, str) else as_rational(self.scale)
        return {p: as_rational(v) / k ** self.weights.get(p, 0) for p, v in point.items()}

    def pull(self, point: Mapping, scale_value=None) -> dict:
        """Normalized values plus the scale -> original values."""
        if isinstance(self.scale, str):
            k = as_rational(scale_value)
            out = {p: as_rational(v) * k ** self.weights.get(p, 0) for p, v in point.items() if p != self.scale}
            out[self.scale] = k
            return out
        k = as_rational(self.scale)
        return {p: as_rational(v) * k ** self.weights.get(p, 0) for p, v in point.items()}


def normalize_b20(s: PlanarSystem, scale_param: str = "b20") -> Normalization:
    """Rescale (x, y) -> (x/k, y/k) with k the x^2 coefficient of y'.

    The monomial x^i y^j picks up the factor k^-(i+j-1). With a rational k
    the coefficients are divided directly; with k a parameter the system
    must be weighted-homogeneous (coefficient of x^i y^j of weight i+j-1),
    and the normalized system is the original one at k = 1.
    """
    fld = s.field()
    k = fld.ydot.coeff_in("y", 0).coeff_in("x", 2)
    if k.is_constant():
        kv = k.constant_value()
        if kv == 0:
            raise ZeroDivisionError("x^2 coefficient of y' vanishes")
        scaled = []
        for comp in (fld.xdot, fld.ydot):
            terms = {}
            ix, iy = s.ring.index["x"], s.ring.index["y"]
            for exp, cf in comp.terms():
                terms[exp] = cf / kv ** (exp[ix] + exp[iy] - 1)
            scaled.append(s.ring.from_terms(terms))
        from .lienard import PlanarField

        new = PlanarSystem.from_field(PlanarField(*scaled), name=s.name)
        return Normalization(new.with_ring(s.ring) if set(new.ring.names) <= set(s.ring.names) else new, kv, {})
    if k != s.ring.gen(scale_param):
        raise ValueError(f"x^2 coefficient of y' is {k}, expected the parameter {scale_param}")
    weights = assign_weights(s.params)
    for comp in (fld.xdot, fld.ydot):
        for (i, j), cf in _monomial_coeffs(comp).items():
            wd = weighted_degree(cf, weights)
            if not wd.homogeneous or (wd.degree is not None and wd.degree != i + j - 1):
                raise ValueError(f"coefficient {cf} of x^{i}*y^{j} is not of weight {i + j - 1}")
    return Normalization(s.specialize({scale_param: 1}), scale_param, weights)


def _monomial_coeffs(p: ParamPoly) -> dict:
    out = {}
    for i, by_x in p.collect("x").items():
        for j, cf in by_x.collect("y").items():
            out[(i, j)] = cf
    return out


__all__ = [
    "ConditionDerivation",
    "Normalization",
    "StepRecord",
    "SysResult",
    "UrabeClosedForm",
    "VerifyReport",
    "assign_weights",
    "check_sys_weighted_homogeneous",
    "generate_sys",
    "normalize_b20",
    "normalize_condition",
    "normalize_set",
    "urabe_series_check",
    "verify_candidate",
]
