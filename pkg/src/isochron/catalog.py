"""Fixture catalog of isochronous families and the checks attached to them.

Records are loaded from ``data/families.yaml``. A record's formulas may use
an integer index (``{n-1}``), named sub-expressions (``defs``), free
parameters and algebraic constants. Instantiation substitutes exact values
for parameters; irrational coefficients become named parameters whose
bigfloat values travel in :attr:`PlanarSystem.constants`.
"""
from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Mapping

import gmpy2
import yaml

from .calgorithm import BIGFLOAT_TOLERANCE, UrabeClosedForm, urabe_series_check, verify_candidate
from .errors import (
    ConstraintViolation,
    IsochronError,
    MalformedSystem,
    UnboundParameter,
    UnknownFamily,
)
from .exprparse import RationalFunction, parse_extended, parse_poly, parse_rational
from .lienard import (
    STATE,
    PlanarField,
    PlanarSystem,
    PowerExpr,
    PowerIntegral,
    _divide_by,
    check_inverse_integrating_factor,
    check_linearization,
    check_power_integral,
    lie_bracket,
    reduce_to_lienard,
)
from .polyalg import DEFAULT_PRECISION, ParamPoly, PolyRing, as_rational, bigfloat, is_bigfloat, precision

DEFAULT_AMPLITUDES = (0.05, 0.1, 0.15, 0.2, 0.25)
SPREAD_TOLERANCE = 1e-6
DRIFT_TOLERANCE = 1e-8
CONSTANT_RESIDUAL = gmpy2.mpfr("1e-70")


# ---------------------------------------------------------------------------
# algebraic constants


@dataclass(frozen=True)
class AlgebraicConstant:
    """Real algebraic number given by a polynomial in ``s`` and an isolating interval.

    ``radical`` is an independent closed form, used as a cross-check.
    """

    id: str
    polynomial: str
    interval: tuple
    radical: str | None = None

    @property
    def defining_poly(self) -> ParamPoly:
        return parse_poly(self.polynomial, variables=("s",))

    def evaluate(self, prec: int = DEFAULT_PRECISION) -> gmpy2.mpfr:
        return _isolate_root(self.polynomial, self.interval, prec)

    def evaluate_radical(self, prec: int = DEFAULT_PRECISION) -> gmpy2.mpfr:
        if self.radical is None:
            raise ValueError(f"{self.id} has no radical form")
        return parse_extended(self.radical).evaluate({}, prec)

    def residual(self, value=None, prec: int = DEFAULT_PRECISION) -> gmpy2.mpfr:
        value = self.evaluate(prec) if value is None else value
        with precision(prec):
            return abs(self.defining_poly.subs({"s": gmpy2.mpfr(value)}, prec))


def _horner(coeffs, x):
    acc = gmpy2.mpfr(0)
    for c in coeffs:
        acc = acc * x + c
    return acc


@lru_cache(maxsize=None)
def _isolate_root(poly_text: str, interval: tuple, prec: int) -> gmpy2.mpfr:
    p = parse_poly(poly_text, variables=("s",))
    deg = p.degree("s")
    dense = [p.coefficient((k,)) for k in range(deg, -1, -1)]
    with precision(prec):
        coeffs = [bigfloat(c, prec) for c in dense]
        lo, hi = (bigfloat(as_rational(v), prec) for v in interval)
        flo, fhi = _horner(coeffs, lo), _horner(coeffs, hi)
        if flo == 0:
            return lo
        if fhi == 0:
            return hi
        if (flo > 0) == (fhi > 0):
            raise ValueError(f"interval {interval} does not bracket a root of {poly_text}")
        for _ in range(prec + 64):
            mid = (lo + hi) / 2
            if mid == lo or mid == hi:
                break
            fm = _horner(coeffs, mid)
            if fm == 0:
                return mid
            if (fm > 0) == (flo > 0):
                lo, flo = mid, fm
            else:
                hi = mid
        return (lo + hi) / 2


# ---------------------------------------------------------------------------
# records

_BRACE = re.compile(r"\{([^{}]*)\}")


def _index_value(expr: str, index: Mapping) -> Fraction:
    r = parse_rational(expr, variables=tuple(index) or ("n",))
    return r.evaluate({k: v for k, v in index.items()})


def expand_template(text: str, index: Mapping, defs: Mapping | None = None) -> str:
    """Evaluate ``{...}`` index expressions and substitute named definitions."""

    def repl(m):
        v = Fraction(_index_value(m.group(1), index))
        return str(v.numerator) if v.denominator == 1 else f"({v})"

    text = _BRACE.sub(repl, text)
    if defs:
        defs = {k: _BRACE.sub(repl, v) for k, v in defs.items()}
        pattern = re.compile(r"\b(" + "|".join(map(re.escape, defs)) + r")\b")
        for _ in range(16):
            new = pattern.sub(lambda m: f"({defs[m.group(1)]})", text)
            if new == text:
                break
            text = new
        else:
            raise MalformedSystem("definitions nest too deeply")
    return " ".join(text.split())


@dataclass(frozen=True)
class FamilyRecord:
    id: str
    title: str
    xdot: str
    ydot: str
    params: tuple = ()
    index: dict = field(default_factory=dict)
    defaults: dict = field(default_factory=dict)
    defs: dict = field(default_factory=dict)
    constants: tuple = ()
    constraints: tuple = ()
    urabe: object = "none"
    integrals: tuple = ()
    linearizations: tuple = ()
    inverse_integrating_factor: str | None = None
    commuting: dict | None = None
    first_integral_expr: str | None = None
    numeric_linearization: dict | None = None
    aliases: tuple = ()
    note: str = ""
    amplitudes: tuple = DEFAULT_AMPLITUDES

    # -- index and bindings -----------------------------------------------------
    def index_values(self, bindings: Mapping | None = None) -> dict:
        bindings = bindings or {}
        out = {}
        for name, spec in self.index.items():
            value = bindings.get(name, spec.get("default"))
            if value is None:
                raise UnboundParameter(f"{self.id}: index {name} has no value")
            value = as_rational(value)
            if value.denominator != 1:
                raise ConstraintViolation(f"{self.id}: index {name} must be an integer")
            value = int(value)
            if value < spec.get("min", 0):
                raise ConstraintViolation(f"{self.id}: {name} = {value} is below {spec.get('min')}")
            if spec.get("parity") == "even" and value % 2:
                raise ConstraintViolation(f"{self.id}: {name} must be even")
            out[name] = value
        return out

    def default_bindings(self) -> dict:
        out = {p: Fraction(1) for p in self.params}
        out.update({k: as_rational(str(v)) for k, v in self.defaults.items()})
        return out

    def text(self, expr: str, index: Mapping) -> str:
        return expand_template(expr, index, self.defs)

    # -- symbolic views -----------------------------------------------------------
    def ring(self) -> PolyRing:
        return PolyRing(STATE + tuple(self.params) + tuple(self.constants))

    def rational_field(self, index: Mapping) -> tuple:
        ring = self.ring()
        return tuple(parse_rational(self.text(t, index), ring=ring) for t in (self.xdot, self.ydot))

    def poly(self, expr: str, index: Mapping) -> ParamPoly:
        return parse_poly(self.text(expr, index), ring=self.ring())

    def polynomial_field(self, index: Mapping) -> PlanarField:
        """Template field with symbolic parameters; needs constant denominators."""
        comps = []
        for r in self.rational_field(index):
            if not r.den.is_constant():
                raise UnboundParameter(f"{self.id}: coefficients have parameter denominators")
            comps.append(r.as_poly())
        return PlanarField(*comps)

    def denominators(self, index: Mapping) -> list:
        return [r.den for r in self.rational_field(index) if not r.den.is_constant()]


def _load_records(raw) -> tuple:
    constants = {
        cid: AlgebraicConstant(cid, spec["polynomial"], tuple(str(v) for v in spec["interval"]), spec.get("radical"))
        for cid, spec in raw.get("constants", {}).items()
    }
    records = {}
    aliases = {}
    tuple_keys = ("params", "constants", "constraints", "integrals", "linearizations", "aliases", "amplitudes")
    for entry in raw["families"]:
        kw = dict(entry)
        for k in tuple_keys:
            if k in kw:
                kw[k] = tuple(kw[k])
        kw["defaults"] = {k: str(v) for k, v in kw.get("defaults", {}).items()}
        kw["defs"] = {k: str(v) for k, v in kw.get("defs", {}).items()}
        rec = FamilyRecord(**kw)
        for c in rec.constants:
            if c not in constants:
                raise MalformedSystem(f"{rec.id}: unknown constant {c}")
        records[rec.id] = rec
        for a in rec.aliases:
            aliases[a] = rec.id
    return constants, records, aliases


@lru_cache(maxsize=1)
def _catalog():
    text = resources.files("isochron").joinpath("data/families.yaml").read_text()
    return _load_records(yaml.safe_load(text))


def constants() -> dict:
    return dict(_catalog()[0])


def constant(cid: str) -> AlgebraicConstant:
    try:
        return _catalog()[0][cid]
    except KeyError:
        raise UnknownFamily(f"no algebraic constant {cid!r}") from None


def family_ids(include_aliases: bool = False) -> list:
    _, records, aliases = _catalog()
    ids = list(records)
    return ids + list(aliases) if include_aliases else ids


def get_record(fid: str) -> FamilyRecord:
    _, records, aliases = _catalog()
    fid = aliases.get(fid, fid)
    try:
        return records[fid]
    except KeyError:
        raise UnknownFamily(f"unknown family {fid!r}") from None


def is_alias(fid: str) -> bool:
    return fid in _catalog()[2]


_INVENTORY_PREFIXES = ("thm1-", "thm2-", "thm3-", "thm4-", "thm5-", "thm6-")


def new_center_inventory() -> list:
    """Ids of the new isochronous centers, aliases included, in catalog order.

    The three infinite families of homogeneous perturbations count once each;
    the classical Loud and Abel anchors are excluded.
    """
    _, records, aliases = _catalog()
    out = []
    for fid, rec in records.items():
        if fid.startswith(_INVENTORY_PREFIXES):
            out.append(fid)
            out.extend(a for a in rec.aliases if a.startswith(_INVENTORY_PREFIXES))
    return out


# ---------------------------------------------------------------------------
# instantiation


def _parse_binding(value):
    if is_bigfloat(value):
        return value
    if isinstance(value, float):
        raise TypeError("float bindings are ambiguous; pass a Fraction or a string")
    return as_rational(value if not isinstance(value, str) else value.strip())


def _constant_values(rec: FamilyRecord, prec: int) -> dict:
    return {c: constant(c).evaluate(prec) for c in rec.constants}


def _numeric_value(p: ParamPoly, values: Mapping, prec: int):
    """Exact Fraction if ``p`` is constant after substitution, else bigfloat."""
    exact = {k: v for k, v in values.items() if not is_bigfloat(v) and k in p.ring.index}
    q = p.subs(exact) if exact else p
    if q.is_constant():
        return q.constant_value()
    floats = {k: v for k, v in values.items() if is_bigfloat(v) and k in q.ring.index}
    unbound = [v for v in q.variables() if v not in floats]
    if unbound:
        return None
    return q.subs(floats, prec)


def _check_constraints(rec: FamilyRecord, index: Mapping, values: Mapping, prec: int):
    checks = [(c, rec.poly(c, index)) for c in rec.constraints]
    checks += [(f"denominator {d}", d) for d in rec.denominators(index)]
    for label, p in checks:
        v = _numeric_value(p, values, prec)
        if v is None:
            continue
        if (is_bigfloat(v) and abs(v) < gmpy2.mpfr("1e-60")) or (not is_bigfloat(v) and v == 0):
            raise ConstraintViolation(f"{rec.id}: {label} must be nonzero")


def instantiate(fid: str, bindings: Mapping | None = None, prec: int = DEFAULT_PRECISION) -> PlanarSystem:
    """Concrete system for the family ``fid``.

    Unbound parameters stay symbolic when they do not occur in denominators.
    Coefficients involving algebraic constants become parameters ``q1, q2, ...``
    whose bigfloat values are stored in ``constants`` of the result.
    """
    rec = get_record(fid)
    bindings = dict(bindings or {})
    index = rec.index_values(bindings)
    exact = {}
    for k, v in bindings.items():
        if k in rec.index:
            continue
        if k not in rec.params:
            raise UnboundParameter(f"{rec.id}: {k!r} is not a parameter (have {rec.params})")
        exact[k] = _parse_binding(v)
    values = {**exact, **_constant_values(rec, prec)}
    _check_constraints(rec, index, values, prec)

    free = tuple(p for p in rec.params if p not in exact)
    target = PolyRing(STATE + free)
    comps, qvals = [], {}
    for r in rec.rational_field(index):
        num, den = r.num.subs(exact), r.den.subs(exact)
        if any(v in free for v in den.variables()):
            raise UnboundParameter(f"{rec.id}: denominator {den} needs values for {free}")
        comps.append(_resolve(num, den, target, rec.constants, qvals, prec))
    names = STATE + free + tuple(qvals)
    ring = PolyRing(names)
    q_ring = {q: ring.gen(q) for q in qvals}
    out = []
    for terms in comps:
        acc = ring.zero
        for exp, coef in terms:
            mono = ring.monomial(exp + (0,) * len(qvals))
            acc = acc + mono * (q_ring[coef] if isinstance(coef, str) else coef)
        out.append(acc)
    return PlanarSystem.from_field(PlanarField(*out), name=rec.id, constants=qvals)


def _resolve(num: ParamPoly, den: ParamPoly, target: PolyRing, consts: tuple, qvals: dict, prec: int) -> list:
    """Split num/den into terms over ``target``; irrational coefficients get fresh names."""
    idx = [num.ring.index[v] for v in target.names]
    cidx = [num.ring.index[v] for v in consts]
    grouped: dict = {}
    for exp, c in num.terms():
        key = tuple(exp[i] for i in idx)
        cexp = tuple(exp[i] for i in cidx)
        grouped.setdefault(key, {})[cexp] = c
    cring = PolyRing(tuple(consts))
    dpoly = den.to_ring(cring) if consts else None
    values = {c: constant(c).evaluate(prec) for c in consts}
    terms = []
    for key in sorted(grouped):
        coef_poly = cring.from_terms(grouped[key])
        if coef_poly.is_zero():
            continue
        ratio = _proportional(coef_poly, dpoly) if consts else None
        if consts and ratio is None:
            with precision(prec):
                value = _as_mpfr(coef_poly, values, prec) / _as_mpfr(dpoly, values, prec)
            name = f"q{len(qvals) + 1}"
            qvals[name] = value
            terms.append((key, name))
        elif consts:
            terms.append((key, ratio))
        else:
            terms.append((key, coef_poly.constant_value() / den.constant_value()))
    return terms


def _proportional(p: ParamPoly, q: ParamPoly) -> Fraction | None:
    """``p/q`` when it is a rational number, else None."""
    _, cp = p.leading_term()
    _, cq = q.leading_term()
    r = Fraction(cp) / Fraction(cq)
    return r if p == q * r else None


def _as_mpfr(p: ParamPoly, values, prec):
    if p.is_constant():
        return bigfloat(p.constant_value(), prec)
    return p.subs(values, prec)


# ---------------------------------------------------------------------------
# exact identities on templates


def zero_urabe_defect(fid: str, bindings: Mapping | None = None, prec: int = DEFAULT_PRECISION):
    """Cleared numerator of A*B' + C*B - 1 for a Case 1 template.

    Returns ``(polynomial, max_abs)``: the polynomial in x, the free parameters
    and the constants, and the largest coefficient once constants are replaced
    by their bigfloat values (exact zero when the family has no constants).
    Bindings may fix some parameters; the rest stay symbolic.
    """
    rec = get_record(fid)
    bindings = dict(bindings or {})
    index = rec.index_values(bindings)
    exact = {k: _parse_binding(v) for k, v in bindings.items() if k in rec.params}
    xr, yr = rec.rational_field(index)
    ring = rec.ring()
    try:
        An = -_divide_by(xr.num, "y")
    except MalformedSystem:
        raise MalformedSystem(f"{rec.id}: x' is not of the form -y*A(x)") from None
    coll = yr.num.collect("y")
    if set(coll) - {0, 2}:
        raise MalformedSystem(f"{rec.id}: y' is not of the form B(x) + C(x)*y^2")
    Bn, Cn = coll.get(0, ring.zero), coll.get(2, ring.zero)
    dx, dy = xr.den, yr.den
    cleared = An * Bn.diff("x") * dy + Cn * Bn * dx - dx * dy * dy
    if exact:
        cleared = cleared.subs(exact)
    if not rec.constants:
        return cleared, Fraction(0) if cleared.is_zero() else max(abs(c) for _, c in cleared.terms())
    values = _constant_values(rec, prec)
    names = [n for n in cleared.ring.names if n not in rec.constants]
    grouped: dict = {}
    for exp, c in cleared.terms():
        key = tuple(e for n, e in zip(cleared.ring.names, exp) if n in names)
        cexp = tuple(e for n, e in zip(cleared.ring.names, exp) if n in rec.constants)
        grouped.setdefault(key, {})[cexp] = c
    cring = PolyRing(tuple(rec.constants))
    worst = gmpy2.mpfr(0)
    with precision(prec):
        for terms in grouped.values():
            v = abs(_as_mpfr(cring.from_terms(terms), values, prec))
            worst = max(worst, v)
    return cleared, worst


def template_checks(fid: str, bindings: Mapping | None = None) -> dict:
    """Exact checks of attached integrals, linearizations and commuting data."""
    rec = get_record(fid)
    index = rec.index_values(bindings)
    out = {}
    fld = None
    if rec.integrals or rec.linearizations or rec.inverse_integrating_factor or rec.commuting:
        fld = rec.polynomial_field(index)
    for i, spec in enumerate(rec.integrals):
        H = PowerIntegral(rec.poly(spec["num"], index), rec.poly(spec["base"], index), _exponent(rec, spec, index))
        out[f"power_integral[{i}]"] = check_power_integral(H, fld)
    for i, spec in enumerate(rec.linearizations):
        base, e = rec.poly(spec["base"], index), _exponent(rec, spec, index)
        u = PowerExpr(rec.poly(spec["u"], index), base, e)
        v = PowerExpr(rec.poly(spec["v"], index), base, e)
        out[f"linearization[{i}]"] = check_linearization(u, v, fld)
    if rec.inverse_integrating_factor:
        out["inverse_integrating_factor"] = check_inverse_integrating_factor(
            rec.poly(rec.inverse_integrating_factor, index), fld
        )
    if rec.commuting:
        Y = commuting_field(fid, bindings)
        out["lie_bracket"] = lie_bracket(fld, Y).is_zero()
    return out


def commuting_field(fid: str, bindings: Mapping | None = None) -> PlanarField:
    rec = get_record(fid)
    if not rec.commuting:
        raise UnknownFamily(f"{fid} has no commuting field")
    index = rec.index_values(bindings)
    return PlanarField(rec.poly(rec.commuting["xdot"], index), rec.poly(rec.commuting["ydot"], index))


def _exponent(rec, spec, index) -> Fraction:
    return Fraction(_index_value(rec.text(str(spec["exponent"]), index), index))


def urabe_form(fid: str, bindings: Mapping | None = None) -> UrabeClosedForm | None:
    rec = get_record(fid)
    if not isinstance(rec.urabe, dict):
        return None
    index = rec.index_values(bindings)
    ring = PolyRing(tuple(rec.params))
    vals = {k: _parse_binding(v) for k, v in (bindings or {}).items() if k in rec.params}

    def coef(key):
        p = parse_poly(rec.text(str(rec.urabe[key]), index), variables=(), ring=ring)
        p = p.subs(vals) if vals else p
        return p.constant_value() if p.is_constant() else p

    s = int(_index_value(rec.text(str(rec.urabe["s"]), index), index))
    return UrabeClosedForm(coef("k1"), coef("k2"), coef("k3"), s)


# ---------------------------------------------------------------------------
# battery


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: object = None
    detail: str = ""
    seconds: float = 0.0


@dataclass
class BatteryReport:
    id: str
    bindings: dict
    order: int
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _timed(name, fn):
    t0 = time.perf_counter()
    try:
        passed, residual, detail = fn()
    except IsochronError as exc:
        passed, residual, detail = False, None, f"{type(exc).__name__}: {exc}"
    return CheckResult(name, bool(passed), residual, detail, time.perf_counter() - t0)


def verification_battery(
    fid: str,
    bindings: Mapping | None = None,
    m: int = 6,
    *,
    amplitudes=None,
    numeric: bool = True,
    prec: int = DEFAULT_PRECISION,
) -> BatteryReport:
    """Run every applicable exact and numeric check for one family instance."""
    rec = get_record(fid)
    full = rec.default_bindings()
    for k, v in (bindings or {}).items():
        full[k] = v
    index = rec.index_values(full)
    point = {k: _parse_binding(v) for k, v in full.items() if k in rec.params}
    point.update(index)
    checks = []
    system = instantiate(fid, point, prec)

    if rec.urabe == "zero":

        def zero_identity():
            _, worst = zero_urabe_defect(fid, index, prec)
            ok = worst == 0 if not rec.constants else worst < BIGFLOAT_TOLERANCE
            return ok, worst, "exact in free parameters" if not rec.constants else "bigfloat constants"

        checks.append(_timed("zero_urabe_identity", zero_identity))

    h = urabe_form(fid, point)
    if h is not None:

        def closed_form():
            order = max(24, 2 * h.s + 4)
            return urabe_series_check(reduce_to_lienard(system), h, order), None, f"order {order}"

        checks.append(_timed("urabe_series", closed_form))

    def sys_check():
        rep = verify_candidate(system, {}, m, prec)
        return rep.passed, rep.max_residual(), f"m={m}"

    checks.append(_timed("sys", sys_check))

    for name, ok in _safe_template_checks(fid, index).items():
        checks.append(CheckResult(name, ok[0], None, ok[1]))

    if numeric:
        checks.extend(_numeric_checks(rec, system, amplitudes))
    return BatteryReport(rec.id, {k: str(v) for k, v in point.items()}, m, checks)


def _safe_template_checks(fid, index) -> dict:
    try:
        return {k: (v, "exact") for k, v in template_checks(fid, index).items()}
    except IsochronError as exc:
        return {"template": (False, f"{type(exc).__name__}: {exc}")}


def _numeric_checks(rec: FamilyRecord, system: PlanarSystem, amplitudes) -> list:
    from .numverify import NumericField, integral_drift, integrate_orbit, isochronicity_scan, numeric_linearization_check

    out = []
    fld = NumericField(system)
    amps = tuple(amplitudes or rec.amplitudes)

    def scan():
        res = isochronicity_scan(fld, amps)
        return res.spread < SPREAD_TOLERANCE, res.spread, f"amplitudes {list(amps)}"

    out.append(_timed("isochronicity_scan", scan))
    if rec.first_integral_expr:

        def drift():
            orbit = integrate_orbit(fld, (0.3, 0.0), 1e-10, 2 * math.pi)
            d = integral_drift(orbit, rec.first_integral_expr)
            return d < DRIFT_TOLERANCE, d, "from (0.3, 0)"

        out.append(_timed("integral_drift", drift))
    if rec.numeric_linearization:
        spec = rec.numeric_linearization
        lim = float(spec.get("min_abs_y", 0.0))

        def lin():
            ok = numeric_linearization_check(
                fld, spec["u"], spec["v"], tuple(spec["start"]), 1e-6, sample_filter=lambda x, y: abs(y) > lim
            )
            return ok, None, f"|y| > {lim}"

        out.append(_timed("numeric_linearization", lin))
    return out


__all__ = [
    "AlgebraicConstant",
    "BatteryReport",
    "CheckResult",
    "FamilyRecord",
    "commuting_field",
    "constant",
    "constants",
    "expand_template",
    "family_ids",
    "get_record",
    "instantiate",
    "new_center_inventory",
    "template_checks",
    "urabe_form",
    "verification_battery",
    "zero_urabe_defect",
]
