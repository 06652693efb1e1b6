"""Truncated univariate power series with polynomial (parameter) coefficients.

A series of order ``N`` stores c_0..c_{N-1} and stands for
``sum c_k t^k + O(t^N)``. Binary operations return the smaller order.
Everything is exact; the coefficients are :class:`ParamPoly` over a
parameter ring that never contains the series variable itself.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    BadConstantTerm,
    LengthMismatch,
    NonInvertibleConstantTerm,
    NonUnitLinearCoefficient,
    NonzeroInnerConstant,
    VariableContextMismatch,
)
from .polyalg import ParamPoly, PolyRing, _fmpq, as_rational


class TruncatedSeries:
    __slots__ = ("ring", "var", "_c")

    def __init__(self, ring: PolyRing, coeffs: Iterable, order: int | None = None, var: str = "t"):
        self.ring = ring
        self.var = var
        raw = []
        for c in coeffs:
            if isinstance(c, ParamPoly):
                if c.ring is not ring:
                    c = c.to_ring(ring)
                raw.append(c._p)
            else:
                raw.append(ring._ctx.constant(_fmpq(c)))
        if order is None:
            order = len(raw)
        if order < 0:
            raise ValueError("negative order")
        zero = ring._ctx.constant(0)
        raw = raw[:order] + [zero] * (order - len(raw))
        self._c = raw

    @classmethod
    def _from_raw(cls, ring, raw: list, var: str) -> "TruncatedSeries":
        s = cls.__new__(cls)
        s.ring, s.var, s._c = ring, var, raw
        return s

    @classmethod
    def from_poly(cls, p: ParamPoly, var: str, order: int, ring: PolyRing | None = None) -> "TruncatedSeries":
        """Series of a polynomial in ``var``; coefficients land in ``ring``
        (default: ``p``'s ring without ``var``)."""
        if ring is None:
            ring = PolyRing(tuple(n for n in p.ring.names if n != var))
        if var not in p.ring.index:
            return cls(ring, [p.to_ring(ring)], order, var)
        coll = p.collect(var)
        coeffs = [coll.get(k, ring.zero).to_ring(ring) if k in coll else ring.zero for k in range(order)]
        return cls(ring, coeffs, order, var)

    @classmethod
    def variable(cls, ring: PolyRing, order: int, var: str = "t") -> "TruncatedSeries":
        return cls(ring, [0, 1], order, var)

    # -- inspection -----------------------------------------------------------
    @property
    def order(self) -> int:
        return len(self._c)

    @property
    def coeffs(self) -> list:
        return [ParamPoly(self.ring, c) for c in self._c]

    def __getitem__(self, k: int) -> ParamPoly:
        if not 0 <= k < self.order:
            raise IndexError(f"coefficient {k} beyond order {self.order}")
        return ParamPoly(self.ring, self._c[k])

    def constant(self) -> ParamPoly:
        return self[0]

    def valuation(self) -> int | None:
        for k, c in enumerate(self._c):
            if c != 0:
                return k
        return None

    def to_poly(self, ring: PolyRing | None = None) -> ParamPoly:
        """The truncation as a polynomial in ``var`` over ``ring`` (default ring + var)."""
        ring = ring or self.ring.extend(self.var)
        t = ring.gen(self.var)
        total = ring.zero
        power = ring.one
        for c in self._c:
            total = total + ParamPoly(self.ring, c).to_ring(ring) * power
            power = power * t
        return total

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.ring is other.ring and self.var == other.var and self._c == other._c

    __hash__ = None

    def __repr__(self):
        terms = []
        for k, c in enumerate(self._c):
            if c != 0:
                terms.append(f"({ParamPoly(self.ring, c)})*{self.var}^{k}")
        return " + ".join(terms + [f"O({self.var}^{self.order})"])

    def truncate(self, order: int) -> "TruncatedSeries":
        if order > self.order:
            raise LengthMismatch(f"cannot raise order {self.order} to {order}")
        return self._from_raw(self.ring, self._c[:order], self.var)

    def _check(self, other):
        if not isinstance(other, TruncatedSeries):
            raise TypeError(f"not a series: {other!r}")
        if other.ring is not self.ring or other.var != self.var:
            raise VariableContextMismatch("series over different rings or variables")

    def _lift(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            self._check(other)
            return other
        return TruncatedSeries(self.ring, [other], self.order, self.var)

    # -- ring operations ------------------------------------------------------
    def __add__(self, other):
        other = self._lift(other)
        n = min(self.order, other.order)
        return self._from_raw(self.ring, [self._c[k] + other._c[k] for k in range(n)], self.var)

    __radd__ = __add__

    def __neg__(self):
        return self._from_raw(self.ring, [-c for c in self._c], self.var)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            if isinstance(other, ParamPoly):
                o = other.to_ring(self.ring)._p if other.ring is not self.ring else other._p
            else:
                o = _fmpq(other)
            return self._from_raw(self.ring, [c * o for c in self._c], self.var)
        return series_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_mul(self, series_recip(other))
        return self * (1 / as_rational(other))

    def __pow__(self, k: int):
        if k < 0:
            return series_recip(self) ** (-k)
        result = TruncatedSeries(self.ring, [1], self.order, self.var)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def shift(self, k: int) -> "TruncatedSeries":
        """Multiply (k > 0) or exactly divide (k < 0) by ``var^|k|``."""
        zero = self.ring._ctx.constant(0)
        if k >= 0:
            return self._from_raw(self.ring, [zero] * k + self._c, self.var)
        if any(c != 0 for c in self._c[:-k]):
            raise ValueError(f"series is not divisible by {self.var}^{-k}")
        return self._from_raw(self.ring, self._c[-k:], self.var)

    def subs_params(self, bindings) -> "TruncatedSeries":
        """Substitute rational values for parameters in every coefficient."""
        return TruncatedSeries(self.ring, [c.subs(bindings) for c in self.coeffs], self.order, self.var)


# ---------------------------------------------------------------------------


def _unit_constant(s: TruncatedSeries, exc) -> Fraction:
    c = ParamPoly(s.ring, s._c[0]) if s.order else s.ring.zero
    if not c.is_constant() or c.is_zero():
        raise exc(f"constant term {c} is not a nonzero rational")
    return c.constant_value()


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    a._check(b)
    n = min(a.order, b.order)
    ac, bc = a._c, b._c
    nza = [i for i in range(n) if ac[i] != 0]
    nzb = [j for j in range(n) if bc[j] != 0]
    zero = a.ring._ctx.constant(0)
    out = [zero] * n
    for i in nza:
        ai = ac[i]
        for j in nzb:
            if i + j >= n:
                break
            out[i + j] = out[i + j] + ai * bc[j]
    return TruncatedSeries._from_raw(a.ring, out, a.var)


def series_recip(a: TruncatedSeries) -> TruncatedSeries:
    """Multiplicative inverse; the constant term must be a nonzero rational."""
    c0 = _unit_constant(a, NonInvertibleConstantTerm)
    inv = _fmpq(1 / c0)
    n = a.order
    ac = a._c
    out = [a.ring._ctx.constant(inv)]
    for k in range(1, n):
        acc = a.ring._ctx.constant(0)
        for j in range(1, k + 1):
            if ac[j] != 0:
                acc = acc + ac[j] * out[k - j]
        out.append(-acc * inv)
    return TruncatedSeries._from_raw(a.ring, out, a.var)


def series_compose(outer: TruncatedSeries, inner: TruncatedSeries) -> TruncatedSeries:
    """``outer(inner(t))`` by Horner's rule; ``inner`` must vanish at 0."""
    outer._check(inner)
    if inner.order and inner._c[0] != 0:
        raise NonzeroInnerConstant(f"inner series has constant term {inner[0]}")
    n = min(outer.order, inner.order)
    if n == 0:
        return TruncatedSeries(outer.ring, [], 0, outer.var)
    inner = inner.truncate(n)
    result = TruncatedSeries(outer.ring, [outer[n - 1]], n, outer.var)
    for k in range(n - 2, -1, -1):
        result = series_mul(result, inner)
        result._c[0] = result._c[0] + outer._c[k]
    return result


def series_powers(inner: TruncatedSeries, top: int) -> list:
    """[inner^0, inner^1, ..., inner^top] at inner's order."""
    one = TruncatedSeries(inner.ring, [1], inner.order, inner.var)
    out = [one]
    for _ in range(top):
        out.append(series_mul(out[-1], inner))
    return out


def series_compose_many(outers: Sequence[TruncatedSeries], inner: TruncatedSeries, order: int | None = None) -> list:
    """Compose several series with one inner series through shared powers of ``inner``.

    Same result as :func:`series_compose` for each outer (truncated to
    ``order``), but every coefficient is a sum of products a_k*[inner^k]_j,
    which keeps coefficients small when the series carry a grading.
    """
    for outer in outers:
        outer._check(inner)
    if inner.order and inner._c[0] != 0:
        raise NonzeroInnerConstant(f"inner series has constant term {inner[0]}")
    n = min([inner.order] + [o.order for o in outers])
    if order is not None:
        n = min(n, order)
    inner = inner.truncate(n)
    powers = series_powers(inner, n - 1)
    zero = inner.ring._ctx.constant(0)
    results = []
    for outer in outers:
        out = [zero] * n
        out[0] = outer._c[0] if n else zero
        for k in range(1, n):
            ak = outer._c[k]
            if ak == 0:
                continue
            pk = powers[k]._c
            for j in range(k, n):
                if pk[j] != 0:
                    out[j] = out[j] + ak * pk[j]
        results.append(TruncatedSeries._from_raw(outer.ring, out, outer.var))
    return results


def series_revert(a: TruncatedSeries) -> TruncatedSeries:
    """Compositional inverse b with a(b(t)) = t, by Lagrange inversion.

    [t^k] b = (1/k) [t^(k-1)] q^k with q = t / a(t).
    """
    if a.order < 2:
        raise LengthMismatch("reversion needs order >= 2")
    if a._c[0] != 0:
        raise NonzeroInnerConstant("series to revert must vanish at 0")
    try:
        _unit_constant(a.shift(-1), NonUnitLinearCoefficient)
    except NonUnitLinearCoefficient:
        raise NonUnitLinearCoefficient(f"linear coefficient {a[1]} is not a nonzero rational") from None
    n = a.order
    q = series_recip(a.shift(-1))  # order n-1, enough for [t^(k-1)], k < n
    zero = a.ring._ctx.constant(0)
    out = [zero]
    power = q
    for k in range(1, n):
        out.append(power._c[k - 1] * _fmpq(Fraction(1, k)))
        if k + 1 < n:
            power = series_mul(power, q)
    return TruncatedSeries._from_raw(a.ring, out, a.var)


def series_differentiate(a: TruncatedSeries) -> TruncatedSeries:
    return TruncatedSeries._from_raw(a.ring, [a._c[k] * k for k in range(1, a.order)], a.var)


def series_integrate(a: TruncatedSeries) -> TruncatedSeries:
    out = [a.ring._ctx.constant(0)] + [c * _fmpq(Fraction(1, k + 1)) for k, c in enumerate(a._c)]
    return TruncatedSeries._from_raw(a.ring, out, a.var)


def series_exp(a: TruncatedSeries) -> TruncatedSeries:
    """exp(a) for a(0) = 0 via n*b_n = sum_{k=1..n} k*a_k*b_{n-k}."""
    if a.order and a._c[0] != 0:
        raise BadConstantTerm("exp needs a zero constant term")
    n = a.order
    ac = a._c
    ctx = a.ring._ctx
    out = [ctx.constant(1)]
    for m in range(1, n):
        acc = ctx.constant(0)
        for k in range(1, m + 1):
            if ac[k] != 0:
                acc = acc + ac[k] * out[m - k] * k
        out.append(acc * _fmpq(Fraction(1, m)))
    return TruncatedSeries._from_raw(a.ring, out[:n], a.var)


def series_log(a: TruncatedSeries) -> TruncatedSeries:
    """log(a) for a(0) = 1 via n*b_n = n*a_n - sum_{k=1..n-1} k*b_k*a_{n-k}."""
    if not a.order or ParamPoly(a.ring, a._c[0]) != a.ring.one:
        raise BadConstantTerm("log needs constant term 1")
    ac = a._c
    ctx = a.ring._ctx
    out = [ctx.constant(0)]
    for m in range(1, a.order):
        acc = ac[m] * m
        for k in range(1, m):
            if out[k] != 0 and ac[m - k] != 0:
                acc = acc - out[k] * ac[m - k] * k
        out.append(acc * _fmpq(Fraction(1, m)))
    return TruncatedSeries._from_raw(a.ring, out, a.var)


def series_sqrt_unit(a: TruncatedSeries) -> TruncatedSeries:
    """Square root with b(0) = 1 of a series with a(0) = 1."""
    if not a.order or ParamPoly(a.ring, a._c[0]) != a.ring.one:
        raise BadConstantTerm("sqrt_unit needs constant term 1")
    ac = a._c
    ctx = a.ring._ctx
    half = _fmpq(Fraction(1, 2))
    out = [ctx.constant(1)]
    for m in range(1, a.order):
        acc = ac[m]
        for k in range(1, m):
            acc = acc - out[k] * out[m - k]
        out.append(acc * half)
    return TruncatedSeries._from_raw(a.ring, out, a.var)


def series_from_coeffs(coeffs: Sequence, ring: PolyRing | None = None, var: str = "t", order: int | None = None) -> TruncatedSeries:
    """Convenience constructor; rationals go into the empty parameter ring."""
    ring = ring or PolyRing(())
    return TruncatedSeries(ring, coeffs, order, var)


__all__ = [
    "TruncatedSeries",
    "series_compose",
    "series_compose_many",
    "series_differentiate",
    "series_exp",
    "series_from_coeffs",
    "series_integrate",
    "series_log",
    "series_mul",
    "series_powers",
    "series_recip",
    "series_revert",
    "series_sqrt_unit",
]
