"""Exact arithmetic kernel: rationals, bigfloats and sparse multivariate polynomials.

Polynomials live in a :class:`PolyRing`, a frozen ordered tuple of variable
names.  Term storage and multiplication are delegated to FLINT's
``fmpq_mpoly``; monomial orders, weights, normalization, substitution and the
canonical text form are implemented here.
"""
from __future__ import annotations

import threading
from collections import namedtuple
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Mapping

import flint
import gmpy2

from .errors import (
    LengthMismatch,
    MissingWeight,
    UnboundVariableInNumericMode,
    VariableContextMismatch,
    ZeroPolynomial,
)

DEFAULT_PRECISION = 256
GUARD_BITS = 32
DRL = "drl"
LEX = "lex"
MAX_EXPONENT = 2**31 - 1

Rational = Fraction
BigFloat = gmpy2.mpfr
WeightMap = Mapping[str, int]
WeightedDegree = namedtuple("WeightedDegree", "homogeneous degree")

_MPQ = type(gmpy2.mpq(0))


# ---------------------------------------------------------------------------
# scalars


def as_rational(value) -> Fraction:
    """Convert an exact scalar (int, Fraction, fmpq, mpq, "p/q") to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, flint.fmpq):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, flint.fmpz):
        return Fraction(int(value))
    if isinstance(value, _MPQ):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"not an exact rational: {value!r}")


def _fmpq(value) -> flint.fmpq:
    q = as_rational(value)
    return flint.fmpq(q.numerator, q.denominator)


def is_bigfloat(value) -> bool:
    return isinstance(value, gmpy2.mpfr)


def is_exact(value) -> bool:
    return isinstance(value, (int, Fraction, flint.fmpq, flint.fmpz, _MPQ)) and not isinstance(value, bool)


def precision(prec: int = DEFAULT_PRECISION):
    """Context manager for bigfloat work at ``prec`` bits plus guard bits.

    gmpy2 contexts are thread-local, so concurrent callers do not interfere.
    """
    return gmpy2.context(precision=prec + GUARD_BITS)


def bigfloat(value, prec: int = DEFAULT_PRECISION) -> gmpy2.mpfr:
    """Round an exact rational (or decimal string) to a bigfloat."""
    with precision(prec):
        if is_bigfloat(value):
            return gmpy2.mpfr(value)
        if isinstance(value, str):
            return gmpy2.mpfr(value)
        q = as_rational(value)
        return gmpy2.mpfr(gmpy2.mpq(q.numerator, q.denominator))


# ---------------------------------------------------------------------------
# monomial orders


def drl_key(exp):
    """Sort key realizing degree-reverse-lexicographic order (larger is bigger)."""
    return (sum(exp), tuple(-e for e in reversed(exp)))


def lex_key(exp):
    return tuple(exp)


_ORDER_KEYS = {DRL: drl_key, LEX: lex_key}


def order_key(order: str):
    try:
        return _ORDER_KEYS[order]
    except KeyError:
        raise ValueError(f"unknown monomial order {order!r}") from None


def monomial_compare(e1, e2, order: str = DRL) -> int:
    """Return 1, 0 or -1 as ``e1`` is greater than, equal to or less than ``e2``."""
    if len(e1) != len(e2):
        raise LengthMismatch(f"exponent vectors of length {len(e1)} and {len(e2)}")
    key = order_key(order)
    k1, k2 = key(e1), key(e2)
    return (k1 > k2) - (k1 < k2)


# ---------------------------------------------------------------------------
# rings and polynomials


class PolyRing:
    """Ordered variable context over Q. Instances are interned by name tuple."""

    _registry: dict = {}
    _lock = threading.Lock()

    def __new__(cls, names: Iterable[str]):
        names = tuple(names)
        ring = cls._registry.get(names)
        if ring is not None:
            return ring
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        for name in names:
            if not name.isidentifier():
                raise ValueError(f"bad variable name {name!r}")
        with cls._lock:
            ring = cls._registry.get(names)
            if ring is None:
                ring = super().__new__(cls)
                ring.names = names
                ring.index = {n: i for i, n in enumerate(names)}
                ring._ctx = flint.fmpq_mpoly_ctx.get(names, "degrevlex")
                cls._registry[names] = ring
        return ring

    def __repr__(self):
        return f"PolyRing({list(self.names)!r})"

    def __reduce__(self):
        return (PolyRing, (self.names,))

    @property
    def nvars(self) -> int:
        return len(self.names)

    def __contains__(self, name) -> bool:
        return name in self.index

    def gen(self, name: str) -> "ParamPoly":
        if name not in self.index:
            raise VariableContextMismatch(f"{name!r} is not a variable of {self!r}")
        return ParamPoly(self, self._ctx.gen(self.index[name]))

    def gens(self) -> tuple:
        return tuple(ParamPoly(self, g) for g in self._ctx.gens())

    def constant(self, value) -> "ParamPoly":
        return ParamPoly(self, self._ctx.constant(_fmpq(value)))

    @property
    def zero(self) -> "ParamPoly":
        return self.constant(0)

    @property
    def one(self) -> "ParamPoly":
        return self.constant(1)

    def monomial(self, exp, coeff=1) -> "ParamPoly":
        if len(exp) != self.nvars:
            raise LengthMismatch(f"exponent vector {exp} for {self.nvars} variables")
        return ParamPoly(self, self._ctx.term(exp_vec=tuple(exp), coeff=_fmpq(coeff)))

    def from_terms(self, terms: Mapping) -> "ParamPoly":
        """Build from a mapping exponent-vector -> exact coefficient."""
        data = {}
        for exp, c in terms.items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != self.nvars:
                raise LengthMismatch(f"exponent vector {exp} for {self.nvars} variables")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent in {exp}")
            data[exp] = _fmpq(c)
        return ParamPoly(self, self._ctx.from_dict(data))

    def extend(self, *names: str) -> "PolyRing":
        """Ring with extra variables appended (existing ones keep their order)."""
        return PolyRing(self.names + tuple(n for n in names if n not in self.index))

    def coerce(self, value) -> "ParamPoly":
        if isinstance(value, ParamPoly):
            if value.ring is self:
                return value
            return value.to_ring(self)
        return self.constant(value)


def _iter_terms(raw):
    """Terms of a flint polynomial as ``(tuple of int, fmpq)`` pairs."""
    for e, c in raw.terms():
        yield tuple(map(int, e)), c


def _raw(ring: PolyRing, other):
    if isinstance(other, ParamPoly):
        if other.ring is not ring:
            raise VariableContextMismatch(f"{other.ring!r} vs {ring!r}")
        return other._p
    if isinstance(other, (int, Fraction, flint.fmpq, flint.fmpz, _MPQ)) and not isinstance(other, bool):
        return _fmpq(other)
    return NotImplemented


class ParamPoly:
    """Sparse polynomial with rational coefficients in a fixed :class:`PolyRing`.

    Values are immutable: every operation returns a new polynomial.
    """

    __slots__ = ("ring", "_p", "_hash")

    def __init__(self, ring: PolyRing, raw):
        self.ring = ring
        self._p = raw
        self._hash = None

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        o = _raw(self.ring, other)
        if o is NotImplemented:
            return o
        return ParamPoly(self.ring, self._p + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = _raw(self.ring, other)
        if o is NotImplemented:
            return o
        return ParamPoly(self.ring, self._p - o)

    def __rsub__(self, other):
        o = _raw(self.ring, other)
        if o is NotImplemented:
            return o
        return ParamPoly(self.ring, o - self._p)

    def __mul__(self, other):
        o = _raw(self.ring, other)
        if o is NotImplemented:
            return o
        return ParamPoly(self.ring, self._p * o)

    __rmul__ = __mul__

    def __neg__(self):
        return ParamPoly(self.ring, -self._p)

    def __pos__(self):
        return self

    def __truediv__(self, other):
        if isinstance(other, ParamPoly):
            if not other.is_constant():
                raise ZeroDivisionError("division by a non-constant polynomial")
            other = other.constant_value()
        q = as_rational(other)
        if q == 0:
            raise ZeroDivisionError("division by zero")
        return ParamPoly(self.ring, self._p * _fmpq(1 / q))

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        degs = self._p.degrees() if self.ring.nvars else ()
        if degs and max(degs) * k > MAX_EXPONENT:
            raise OverflowError("exponent overflow")
        return ParamPoly(self.ring, self._p**k)

    # -- comparison -------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, ParamPoly):
            return self.ring is other.ring and self._p == other._p
        o = _raw(self.ring, other)
        if o is NotImplemented:
            return NotImplemented
        return self._p == self.ring._ctx.constant(o)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ring.names, tuple(sorted((e, str(c)) for e, c in _iter_terms(self._p)))))
        return self._hash

    def __bool__(self):
        return not self._p.is_zero()

    # -- inspection -------------------------------------------------------
    def is_zero(self) -> bool:
        return self._p.is_zero()

    def is_constant(self) -> bool:
        return self._p.is_constant()

    def constant_value(self) -> Fraction:
        """Rational value of a constant polynomial."""
        if not self._p.is_constant():
            raise ValueError(f"not a constant: {self}")
        return self.constant_term()

    def constant_term(self) -> Fraction:
        return self.coefficient((0,) * self.ring.nvars)

    def coefficient(self, exp) -> Fraction:
        exp = tuple(exp)
        if len(exp) != self.ring.nvars:
            raise LengthMismatch(f"exponent vector {exp} for {self.ring.nvars} variables")
        return as_rational(self._p[exp])

    def __len__(self):
        return len(self._p)

    def terms(self, order: str = DRL) -> list:
        """List of ``(exponent tuple, Fraction)`` sorted decreasingly in ``order``."""
        key = order_key(order)
        out = [(e, as_rational(c)) for e, c in _iter_terms(self._p)]
        out.sort(key=lambda t: key(t[0]), reverse=True)
        return out

    def to_dict(self) -> dict:
        return {e: as_rational(c) for e, c in _iter_terms(self._p)}

    def leading_term(self, order: str = DRL):
        if self.is_zero():
            raise ZeroPolynomial("zero polynomial has no leading term")
        key = order_key(order)
        exp, c = max(_iter_terms(self._p), key=lambda t: key(t[0]))
        return tuple(exp), as_rational(c)

    def degrees(self) -> tuple:
        return tuple(int(d) for d in self._p.degrees()) if self.ring.nvars else ()

    def degree(self, var: str) -> int:
        if var not in self.ring.index:
            raise VariableContextMismatch(f"{var!r} is not a variable of {self.ring!r}")
        if self.is_zero():
            return -1
        return self.degrees()[self.ring.index[var]]

    def total_degree(self) -> int:
        if self.is_zero():
            return -1
        return int(self._p.total_degree())

    def variables(self) -> tuple:
        """Names of variables that actually occur."""
        return tuple(n for n, d in zip(self.ring.names, self.degrees()) if d > 0)

    # -- transformations --------------------------------------------------
    def diff(self, var: str) -> "ParamPoly":
        if var not in self.ring.index:
            raise VariableContextMismatch(f"{var!r} is not a variable of {self.ring!r}")
        return ParamPoly(self.ring, self._p.derivative(self.ring.index[var]))

    def collect(self, var: str) -> dict:
        """Split by powers of ``var``: ``{k: coefficient of var^k}`` (same ring, var-free)."""
        i = self.ring.index[var]
        groups: dict = {}
        for e, c in _iter_terms(self._p):
            k = e[i]
            e = e[:i] + (0,) + e[i + 1:]
            groups.setdefault(k, {})[e] = c
        ctx = self.ring._ctx
        return {k: ParamPoly(self.ring, ctx.from_dict(d)) for k, d in sorted(groups.items())}

    def coeff_in(self, var: str, k: int) -> "ParamPoly":
        return self.collect(var).get(k, self.ring.zero)

    def to_ring(self, ring: PolyRing) -> "ParamPoly":
        """Re-express in another ring; every occurring variable must exist there."""
        if ring is self.ring:
            return self
        missing = [v for v in self.variables() if v not in ring.index]
        if missing:
            raise VariableContextMismatch(f"variables {missing} not in {ring!r}")
        if not self.ring.nvars:
            return ring.constant(self.constant_value())
        return ParamPoly(ring, self._p.project_to_context(ring._ctx))

    def subs(self, bindings: Mapping, prec: int = DEFAULT_PRECISION):
        return substitute(self, bindings, prec)

    def evaluate(self, point: Mapping) -> Fraction:
        """Exact value at a rational point binding every occurring variable."""
        value = substitute(self, point)
        if isinstance(value, ParamPoly):
            if not value.is_constant():
                raise UnboundVariableInNumericMode(f"unbound variables {value.variables()}")
            return value.constant_value()
        raise TypeError("point is not rational")

    # -- text ---------------------------------------------------------------
    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        return f"ParamPoly({format_poly(self)!r})"


def format_poly(p: ParamPoly) -> str:
    """Canonical text in the polynomial grammar, terms in decreasing DRL order."""
    if p.is_zero():
        return "0"
    names = p.ring.names
    parts = []
    for exp, c in p.terms(DRL):
        mono = "*".join(
            names[i] if e == 1 else f"{names[i]}^{e}" for i, e in enumerate(exp) if e
        )
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if not mono:
            body = str(a)
        elif a == 1:
            body = mono
        else:
            body = f"{a}*{mono}"
        parts.append((sign, body))
    first_sign, first = parts[0]
    text = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        text += f" {sign} {body}"
    return text


# ---------------------------------------------------------------------------
# operations with explicit names


def poly_arith(p: ParamPoly, q: ParamPoly, op: str) -> ParamPoly:
    if p.ring is not q.ring:
        raise VariableContextMismatch(f"{p.ring!r} vs {q.ring!r}")
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    raise ValueError(f"unknown operation {op!r}")


def differentiate(p: ParamPoly, var: str) -> ParamPoly:
    return p.diff(var)


def substitute(p: ParamPoly, bindings: Mapping, prec: int = DEFAULT_PRECISION):
    """Substitute rationals, polynomials or bigfloats for variables.

    * only rationals: result stays in ``p.ring`` (exact);
    * some polynomial values: result lives in their common ring;
    * any bigfloat: every occurring variable must be bound, result is a
      bigfloat computed with ``prec`` + guard bits.
    """
    ring = p.ring
    for name in bindings:
        if name not in ring.index:
            raise VariableContextMismatch(f"{name!r} is not a variable of {ring!r}")
    values = dict(bindings)
    if any(is_bigfloat(v) for v in values.values()):
        unbound = [v for v in p.variables() if v not in values]
        if unbound:
            raise UnboundVariableInNumericMode(f"unbound variables {unbound} with bigfloat bindings")
        return _eval_bigfloat(p, values, prec)
    polys = [v for v in values.values() if isinstance(v, ParamPoly)]
    if not polys:
        if not values:
            return p
        sub = {name: _fmpq(v) for name, v in values.items()}
        return ParamPoly(ring, p._p.subs(sub))
    target = polys[0].ring
    if any(q.ring is not target for q in polys):
        raise VariableContextMismatch("polynomial bindings from different rings")
    images = []
    for name in ring.names:
        if name in values:
            images.append(target.coerce(values[name])._p)
        elif name in target.index:
            images.append(target.gen(name)._p)
        elif p.degree(name) > 0:
            raise VariableContextMismatch(f"unbound variable {name!r} missing from target ring")
        else:
            images.append(target.zero._p)
    if not ring.nvars:
        return target.constant(p.constant_value())
    return ParamPoly(target, p._p.compose(*images, ctx=target._ctx))


def _eval_bigfloat(p: ParamPoly, values: Mapping, prec: int):
    with precision(prec):
        vals = {}
        for name, v in values.items():
            vals[p.ring.index[name]] = gmpy2.mpfr(v) if is_bigfloat(v) else bigfloat(v, prec)
        powers: dict = {}
        total = []
        for exp, c in _iter_terms(p._p):
            term = gmpy2.mpfr(gmpy2.mpq(int(c.p), int(c.q)))
            for i, e in enumerate(exp):
                if e:
                    key = (i, e)
                    if key not in powers:
                        powers[key] = vals[i] ** e
                    term *= powers[key]
            total.append(term)
        return gmpy2.fsum(total) if total else gmpy2.mpfr(0)


def weighted_degree(p: ParamPoly, w: WeightMap) -> WeightedDegree:
    """Whether every monomial of ``p`` has one weighted degree, and which."""
    used = p.variables()
    missing = [v for v in used if v not in w]
    if missing:
        raise MissingWeight(f"no weight for {missing}")
    for v in used:
        if int(w[v]) <= 0:
            raise ValueError(f"weight of {v!r} must be positive")
    weights = [int(w.get(n, 0)) for n in p.ring.names]
    degrees = {sum(wi * e for wi, e in zip(weights, exp)) for exp, _ in _iter_terms(p._p)}
    if not degrees:
        return WeightedDegree(True, None)
    if len(degrees) == 1:
        return WeightedDegree(True, degrees.pop())
    return WeightedDegree(False, None)


def content(p: ParamPoly) -> Fraction:
    """Signed rational content: ``p == content(p) * primitive_part(p)``."""
    if p.is_zero():
        raise ZeroPolynomial("content of the zero polynomial")
    coeffs = [as_rational(c) for c in p._p.coeffs()]
    num = 0
    den = 1
    for c in coeffs:
        num = gcd(num, c.numerator)
        den = lcm(den, c.denominator)
    c0 = p.leading_term(DRL)[1]
    sign = -1 if c0 < 0 else 1
    return Fraction(sign * num, den)


def primitive_part(p: ParamPoly) -> ParamPoly:
    """Integer-coefficient associate of ``p`` with content 1 and positive DRL leading coefficient."""
    return p / content(p)
