"""Buchberger's algorithm over Q with the normal selection strategy.

Work happens on flint polynomials in a context carrying the requested
monomial order, so the leading term is always the first stored term.
Results come back as :class:`ParamPoly` in the caller's ring.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import flint

from .errors import ResourceLimit, VariableContextMismatch
from .polyalg import DRL, LEX, ParamPoly, PolyRing, order_key, primitive_part

DEFAULT_MAX_PAIRS = 5000
DEFAULT_MAX_DEGREE = 40

_FLINT_ORDER = {DRL: "degrevlex", LEX: "lex"}


@dataclass(frozen=True)
class GroebnerBasis:
    generators: tuple
    order: str = DRL
    reduced: bool = True

    @property
    def ring(self) -> PolyRing:
        return self.generators[0].ring

    def __iter__(self):
        return iter(self.generators)

    def __len__(self):
        return len(self.generators)

    def is_unit_ideal(self) -> bool:
        return len(self.generators) == 1 and self.generators[0].is_constant() and not self.generators[0].is_zero()

    def contains(self, p: ParamPoly) -> bool:
        return normal_form(p, self).is_zero()


class _Engine:
    def __init__(self, ring: PolyRing, order: str):
        if order not in _FLINT_ORDER:
            raise ValueError(f"unknown monomial order {order!r}")
        self.ring = ring
        self.order = order
        self.ctx = flint.fmpq_mpoly_ctx.get(ring.names, _FLINT_ORDER[order])
        self.key = order_key(order)

    def load(self, p: ParamPoly):
        if p.ring is not self.ring:
            raise VariableContextMismatch(f"{p.ring!r} vs {self.ring!r}")
        return self.ctx.from_dict(p._p.to_dict())

    def unload(self, q) -> ParamPoly:
        return ParamPoly(self.ring, self.ring._ctx.from_dict(q.to_dict()))

    @staticmethod
    def lm(p) -> tuple:
        return tuple(int(e) for e in p.monomial(0))

    def monic(self, p):
        return p / p.leading_coefficient()

    def term(self, exp, coeff):
        return self.ctx.term(exp_vec=exp, coeff=coeff)

    def reduce(self, p, basis, lms, full=True):
        """Remainder of p on division by ``basis`` (monic, leading monomials ``lms``)."""
        rem = self.ctx.from_dict({})
        while not p.is_zero():
            m = self.lm(p)
            c = p.leading_coefficient()
            for g, gm in zip(basis, lms):
                if all(a >= b for a, b in zip(m, gm)):
                    quot = tuple(a - b for a, b in zip(m, gm))
                    p = p - self.term(quot, c) * g
                    break
            else:
                if not full:
                    return p
                lt = self.term(m, c)
                rem = rem + lt
                p = p - lt
        return rem


def _lcm(a, b):
    return tuple(max(x, y) for x, y in zip(a, b))


def _divides(a, b):
    return all(x <= y for x, y in zip(a, b))


def buchberger(
    gens,
    order: str = DRL,
    *,
    max_pairs: int = DEFAULT_MAX_PAIRS,
    max_degree: int = DEFAULT_MAX_DEGREE,
    time_limit: float | None = None,
) -> GroebnerBasis:
    """Reduced Gröbner basis of the ideal generated by ``gens``.

    Pairs are processed by smallest lcm (normal strategy) with ties broken by
    generator indices, so the output is deterministic. Buchberger's product
    and chain criteria skip useless pairs.
    """
    gens = [p for p in gens]
    if not gens:
        raise ValueError("need at least one generator")
    ring = gens[0].ring
    eng = _Engine(ring, order)
    started = time.monotonic()

    basis, lms = [], []
    for p in gens:
        q = eng.load(p)
        if basis:
            q = eng.reduce(q, basis, lms)
        if not q.is_zero():
            q = eng.monic(q)
            if q.is_constant():
                return GroebnerBasis((ring.one,), order, True)
            basis.append(q)
            lms.append(eng.lm(q))
    if not basis:
        return GroebnerBasis((ring.zero,), order, True)

    pairs = {}

    def add_pairs(k):
        for i in range(k):
            pairs[(i, k)] = _lcm(lms[i], lms[k])

    for k in range(1, len(basis)):
        add_pairs(k)
    processed = 0
    while pairs:
        (i, j) = min(pairs, key=lambda ij: (sum(pairs[ij]), eng.key(pairs[ij]), ij))
        lcm = pairs.pop((i, j))
        if sum(lcm) > max_degree:
            raise ResourceLimit(f"pair lcm degree {sum(lcm)} exceeds cap {max_degree}")
        processed += 1
        if processed > max_pairs:
            raise ResourceLimit(f"more than {max_pairs} critical pairs")
        if time_limit is not None and time.monotonic() - started > time_limit:
            raise ResourceLimit(f"time limit of {time_limit}s exceeded")
        # product criterion
        if all(a == 0 or b == 0 for a, b in zip(lms[i], lms[j])):
            continue
        # chain criterion
        if any(
            k not in (i, j)
            and _divides(lms[k], lcm)
            and (min(i, k), max(i, k)) not in pairs
            and (min(j, k), max(j, k)) not in pairs
            for k in range(len(basis))
        ):
            continue
        fi = eng.term(tuple(a - b for a, b in zip(lcm, lms[i])), 1) * basis[i]
        fj = eng.term(tuple(a - b for a, b in zip(lcm, lms[j])), 1) * basis[j]
        s = eng.reduce(fi - fj, basis, lms)
        if s.is_zero():
            continue
        s = eng.monic(s)
        basis.append(s)
        lms.append(eng.lm(s))
        if s.is_constant():
            one = ring.one
            return GroebnerBasis((one,), order, True)
        add_pairs(len(basis) - 1)

    return GroebnerBasis(_interreduce(eng, basis, lms), order, True)


def _interreduce(eng: _Engine, basis, lms) -> tuple:
    # minimal basis: drop elements whose leading monomial is a multiple of another's
    keep = []
    for i, m in enumerate(lms):
        if any(j != i and _divides(lms[j], m) and (lms[j] != m or j < i) for j in range(len(lms))):
            continue
        keep.append(i)
    mins = [basis[i] for i in keep]
    mlms = [lms[i] for i in keep]
    reduced = []
    for k, g in enumerate(mins):
        others = [h for t, h in enumerate(mins) if t != k]
        olms = [m for t, m in enumerate(mlms) if t != k]
        lt = eng.term(mlms[k], 1)
        tail = eng.reduce(g - lt, others, olms)
        reduced.append(lt + tail)
    out = [primitive_part(eng.unload(g)) for g in reduced]
    out.sort(key=lambda p: order_key(eng.order)(p.leading_term(eng.order)[0]))
    return tuple(out)


def normal_form(p: ParamPoly, gb: GroebnerBasis) -> ParamPoly:
    """Remainder of ``p`` on full division by ``gb``; zero iff p is in the ideal."""
    if p.is_zero():
        return p
    eng = _Engine(p.ring, gb.order)
    basis = [eng.monic(eng.load(g)) for g in gb.generators if not g.is_zero()]
    lms = [eng.lm(g) for g in basis]
    return eng.unload(eng.reduce(eng.load(p), basis, lms))


def s_polynomial(f: ParamPoly, g: ParamPoly, order: str = DRL) -> ParamPoly:
    eng = _Engine(f.ring, order)
    a, b = eng.monic(eng.load(f)), eng.monic(eng.load(g))
    la, lb = eng.lm(a), eng.lm(b)
    lcm = _lcm(la, lb)
    s = eng.term(tuple(x - y for x, y in zip(lcm, la)), 1) * a - eng.term(tuple(x - y for x, y in zip(lcm, lb)), 1) * b
    return eng.unload(s)


def satisfies_buchberger_criterion(gb: GroebnerBasis) -> bool:
    """Every S-polynomial of the basis reduces to zero."""
    gens = [g for g in gb.generators if not g.is_zero()]
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            if not normal_form(s_polynomial(gens[i], gens[j], gb.order), gb).is_zero():
                return False
    return True


def is_reduced(gb: GroebnerBasis) -> bool:
    """No term of any generator is divisible by another generator's leading monomial."""
    gens = list(gb.generators)
    lms = [g.leading_term(gb.order)[0] for g in gens]
    for i, g in enumerate(gens):
        for exp, _ in g.terms(gb.order):
            if any(j != i and _divides(lms[j], exp) for j in range(len(gens))):
                return False
    return True


__all__ = [
    "GroebnerBasis",
    "buchberger",
    "is_reduced",
    "normal_form",
    "s_polynomial",
    "satisfies_buchberger_criterion",
]
