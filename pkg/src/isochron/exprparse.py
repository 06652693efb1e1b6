"""Text front end: polynomial, rational-function and extended expression grammars.

All three share one tokenizer and recursive-descent parser producing a small
syntax tree; they differ in how the tree is lowered:

* :func:`parse_poly` -> exact :class:`~isochron.polyalg.ParamPoly`
  (integer/rational literals, ``+ - * ^``, division by constants only);
* :func:`parse_rational` -> :class:`RationalFunction`, division by arbitrary
  polynomials (used for fixture formulas with denominators);
* :func:`parse_extended` -> :class:`EvalExpr`, numeric evaluation only, adds
  ``sqrt``, ``tan``, ``arctan``, rational exponents and decimal literals.

The grammar is documented in ``docs/grammar.md``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple

import gmpy2

from .errors import (
    DomainError,
    ExpressionSyntaxError,
    MalformedRationalExponent,
    NegativeExponent,
    UnboundVariableInNumericMode,
    UnknownVariable,
)
from .polyalg import DEFAULT_PRECISION, ParamPoly, format_poly, PolyRing, bigfloat, is_bigfloat, precision

FUNCTIONS = ("sqrt", "tan", "arctan")

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>\d+(?:\.\d*)?|\.\d+)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


class Token(NamedTuple):
    kind: str
    value: str
    pos: int


def tokenize(text: str) -> list:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


# syntax tree nodes: tuples (tag, pos, ...)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, message, pos=None, cls=ExpressionSyntaxError):
        return cls(message, self.text, self.tok.pos if pos is None else pos)

    def take(self, value=None, kind=None) -> Token:
        t = self.tok
        if (value is not None and t.value != value) or (kind is not None and t.kind != kind):
            want = repr(value) if value is not None else kind
            got = "end of input" if t.kind == "eof" else repr(t.value)
            raise self.error(f"expected {want}, found {got}")
        self.i += 1
        return t

    def accept(self, value) -> bool:
        if self.tok.kind == "op" and self.tok.value == value:
            self.i += 1
            return True
        return False

    def parse(self):
        node = self.expr()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.value!r}" + (" (implicit multiplication is not supported)" if self.tok.kind in ("name", "num") or self.tok.value == "(" else ""))
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.value in "+-":
            op = self.take()
            rhs = self.term()
            node = ("add" if op.value == "+" else "sub", op.pos, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.value in "*/":
            op = self.take()
            rhs = self.unary()
            node = ("mul" if op.value == "*" else "div", op.pos, node, rhs)
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.value in "+-":
            op = self.take()
            operand = self.unary()
            return operand if op.value == "+" else ("neg", op.pos, operand)
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.value == "^":
            caret = self.take()
            exponent = self.exponent(caret.pos)
            return ("pow", caret.pos, base, exponent)
        return base

    def exponent(self, pos) -> Fraction:
        t = self.tok
        if t.kind == "num":
            self.take()
            if not t.value.isdigit():
                raise self.error("exponent must be an integer or a parenthesized rational p/q", t.pos, MalformedRationalExponent)
            return Fraction(int(t.value))
        if t.kind == "op" and t.value == "-":
            self.take()
            n = self.tok
            if n.kind == "num" and n.value.isdigit():
                self.take()
                return Fraction(-int(n.value))
            raise self.error("malformed exponent", n.pos, MalformedRationalExponent)
        if self.accept("("):
            sign = 1
            if self.tok.kind == "op" and self.tok.value in "+-":
                sign = -1 if self.take().value == "-" else 1
            n = self.tok
            if n.kind != "num" or not n.value.isdigit():
                raise self.error("exponent must be an integer or a rational p/q", n.pos, MalformedRationalExponent)
            self.take()
            value = Fraction(sign * int(n.value))
            if self.accept("/"):
                d = self.tok
                if d.kind != "num" or not d.value.isdigit() or int(d.value) == 0:
                    raise self.error("malformed rational exponent denominator", d.pos, MalformedRationalExponent)
                self.take()
                value /= int(d.value)
            if not self.accept(")"):
                raise self.error("malformed rational exponent, expected ')'", None, MalformedRationalExponent)
            return value
        raise self.error("missing exponent", t.pos, MalformedRationalExponent)

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.take()
            return ("num", t.pos, t.value)
        if t.kind == "name":
            self.take()
            if self.tok.kind == "op" and self.tok.value == "(":
                if t.value not in FUNCTIONS:
                    raise self.error(f"unknown function {t.value!r}", t.pos)
                self.take("(")
                arg = self.expr()
                self.take(")")
                return ("call", t.pos, t.value, arg)
            return ("var", t.pos, t.value)
        if t.kind == "op" and t.value == "(":
            self.take()
            node = self.expr()
            self.take(")")
            return node
        got = "end of input" if t.kind == "eof" else repr(t.value)
        raise self.error(f"expected a number, name or '(', found {got}")


def _literal(value: str) -> Fraction:
    """Exact value of a decimal or integer literal."""
    if "." in value:
        whole, frac = value.split(".")
        return Fraction(int(whole or "0") * 10 ** len(frac) + int(frac or "0"), 10 ** len(frac))
    return Fraction(int(value))


# ---------------------------------------------------------------------------
# polynomial grammar


def default_ring(params: Iterable[str] = (), variables: Iterable[str] = ("x", "y")) -> PolyRing:
    return PolyRing(tuple(variables) + tuple(p for p in params if p not in tuple(variables)))


def parse_poly(text: str, params: Iterable[str] = (), *, variables: Iterable[str] = ("x", "y"), ring: PolyRing | None = None) -> ParamPoly:
    """Parse polynomial text over ``ring`` (default: variables + params)."""
    ring = ring or default_ring(params, variables)
    tree = _Parser(text).parse()
    return _PolyLowering(text, ring).lower(tree)


class _PolyLowering:
    def __init__(self, text, ring):
        self.text = text
        self.ring = ring

    def fail(self, message, pos, cls=ExpressionSyntaxError):
        return cls(message, self.text, pos)

    def lower(self, node):
        tag, pos = node[0], node[1]
        if tag == "num":
            if "." in node[2]:
                raise self.fail("decimal literals are not allowed in the polynomial grammar", pos)
            return self.ring.constant(int(node[2]))
        if tag == "var":
            name = node[2]
            if name not in self.ring.index:
                raise self.fail(f"unknown variable {name!r}", pos, UnknownVariable)
            return self.ring.gen(name)
        if tag == "neg":
            return -self.lower(node[2])
        if tag in ("add", "sub", "mul"):
            a, b = self.lower(node[2]), self.lower(node[3])
            return a + b if tag == "add" else a - b if tag == "sub" else a * b
        if tag == "div":
            num, den = self.lower(node[2]), self.lower(node[3])
            if not den.is_constant():
                raise self.fail("division by a non-constant is not allowed in the polynomial grammar", pos)
            if den.is_zero():
                raise self.fail("division by zero", pos)
            return num / den.constant_value()
        if tag == "pow":
            e = node[3]
            if e < 0:
                raise self.fail("negative exponent", pos, NegativeExponent)
            if e.denominator != 1:
                raise self.fail("rational exponent in the polynomial grammar", pos, MalformedRationalExponent)
            return self.lower(node[2]) ** int(e)
        if tag == "call":
            raise self.fail(f"function {node[2]!r} is not allowed in the polynomial grammar", pos)
        raise AssertionError(tag)


class RationalFunction(NamedTuple):
    """Quotient ``num / den`` of polynomials over one ring; never reduced."""

    num: ParamPoly
    den: ParamPoly

    def __add__(self, other):
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(self.num * other.den + other.num * self.den, self.den * other.den)

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        return RationalFunction(self.num * other.num, self.den * other.den)

    def __truediv__(self, other):
        if other.num.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def as_poly(self) -> ParamPoly:
        if not self.den.is_constant():
            raise ValueError("not a polynomial")
        return self.num / self.den.constant_value()

    def evaluate(self, point: Mapping):
        d = self.den.subs(point)
        n = self.num.subs(point)
        if isinstance(d, ParamPoly):
            if not (d.is_constant() and n.is_constant()):
                raise UnboundVariableInNumericMode("point does not bind every variable")
            if d.is_zero():
                raise ZeroDivisionError("denominator vanishes at the point")
            return n.constant_value() / d.constant_value()
        if d == 0:
            raise ZeroDivisionError("denominator vanishes at the point")
        return n / d


def parse_rational(text: str, params: Iterable[str] = (), *, variables: Iterable[str] = ("x", "y"), ring: PolyRing | None = None) -> RationalFunction:
    """Parse text with arbitrary polynomial denominators into an exact quotient."""
    ring = ring or default_ring(params, variables)
    tree = _Parser(text).parse()
    return _RationalLowering(text, ring).lower(tree)


class _RationalLowering(_PolyLowering):
    def lower(self, node):
        tag, pos = node[0], node[1]
        one = self.ring.one
        if tag in ("num", "var"):
            return RationalFunction(super().lower(node), one)
        if tag == "neg":
            return -self.lower(node[2])
        if tag in ("add", "sub", "mul", "div"):
            a, b = self.lower(node[2]), self.lower(node[3])
            if tag == "div":
                if b.is_zero():
                    raise self.fail("division by zero", pos)
                return a / b
            return a + b if tag == "add" else a - b if tag == "sub" else a * b
        if tag == "pow":
            e = node[3]
            if e.denominator != 1:
                raise self.fail("rational exponent in the rational grammar", pos, MalformedRationalExponent)
            base = self.lower(node[2])
            k = abs(int(e))
            r = RationalFunction(base.num**k, base.den**k)
            return r if e >= 0 else RationalFunction(one, one) / r
        return super().lower(node)


# ---------------------------------------------------------------------------
# extended grammar (numeric evaluation)


@dataclass(frozen=True)
class EvalExpr:
    """Parsed extended expression; evaluate with :meth:`evaluate` or :meth:`compile`."""

    source: str
    tree: tuple

    def __str__(self):
        return self.source

    def variables(self) -> tuple:
        names = []

        def walk(node):
            if node[0] == "var":
                if node[2] not in names:
                    names.append(node[2])
            else:
                for child in node[2:]:
                    if isinstance(child, tuple):
                        walk(child)

        walk(self.tree)
        return tuple(names)

    def evaluate(self, point: Mapping, prec: int = DEFAULT_PRECISION):
        """Bigfloat value at ``point``; raises :class:`DomainError` at poles and branch cuts."""
        with precision(prec):
            env = {k: (gmpy2.mpfr(v) if is_bigfloat(v) or isinstance(v, float) else bigfloat(v, prec)) for k, v in point.items()}
            value = _eval_mpfr(self.tree, env, self.source)
            if not gmpy2.is_finite(value):
                raise DomainError(f"non-finite value of {self.source!r}")
            return value

    def compile(self, args: Iterable[str] = ("x", "y"), constants: Mapping | None = None):
        """Float function of positional ``args``; other names are taken from ``constants``."""
        args = tuple(args)
        consts = {k: float(v) for k, v in (constants or {}).items()}
        missing = [v for v in self.variables() if v not in args and v not in consts]
        if missing:
            raise UnboundVariableInNumericMode(f"unbound names {missing} in {self.source!r}")
        fn = _compile_float(self.tree, {a: i for i, a in enumerate(args)}, consts)
        source = self.source

        def evaluate(*values):
            value = fn(values)
            if not math.isfinite(value):
                raise DomainError(f"non-finite value of {source!r}")
            return value

        return evaluate


def parse_extended(text: str) -> EvalExpr:
    return EvalExpr(text, _fold_literals(_Parser(text).parse()))


def _fold_literals(node):
    if node[0] == "num":
        return ("num", node[1], _literal(node[2]))
    return node[:2] + tuple(_fold_literals(c) if isinstance(c, tuple) else c for c in node[2:])


def _eval_mpfr(node, env, source):
    tag = node[0]
    if tag == "num":
        q = node[2]
        return gmpy2.mpfr(gmpy2.mpq(q.numerator, q.denominator))
    if tag == "var":
        try:
            return env[node[2]]
        except KeyError:
            raise UnboundVariableInNumericMode(f"unbound name {node[2]!r} in {source!r}") from None
    if tag == "neg":
        return -_eval_mpfr(node[2], env, source)
    if tag in ("add", "sub", "mul", "div"):
        a = _eval_mpfr(node[2], env, source)
        b = _eval_mpfr(node[3], env, source)
        if tag == "add":
            return a + b
        if tag == "sub":
            return a - b
        if tag == "mul":
            return a * b
        if b == 0:
            raise DomainError(f"division by zero in {source!r}")
        return a / b
    if tag == "pow":
        return _rational_power(_eval_mpfr(node[2], env, source), node[3], source, gmpy2.mpfr)
    if tag == "call":
        a = _eval_mpfr(node[3], env, source)
        name = node[2]
        if name == "sqrt":
            if a < 0:
                raise DomainError(f"sqrt of a negative number in {source!r}")
            return gmpy2.sqrt(a)
        if name == "arctan":
            return gmpy2.atan(a)
        if gmpy2.cos(a) == 0:
            raise DomainError(f"tan pole in {source!r}")
        return gmpy2.tan(a)
    raise AssertionError(tag)


def _rational_power(base, e: Fraction, source, cast):
    if e.denominator == 1:
        if base == 0 and e < 0:
            raise DomainError(f"zero to a negative power in {source!r}")
        return base ** int(e)
    if base < 0:
        if e.denominator % 2 == 0:
            raise DomainError(f"even root of a negative number in {source!r}")
        mag = _real_root(-base, e, cast)
        return mag if e.numerator % 2 == 0 else -mag
    if base == 0:
        if e < 0:
            raise DomainError(f"zero to a negative power in {source!r}")
        return cast(0)
    return _real_root(base, e, cast)


def _real_root(base, e: Fraction, cast):
    if cast is float:
        return base ** (e.numerator / e.denominator)
    return gmpy2.root(base, e.denominator) ** e.numerator


def _compile_float(node, index, consts):
    """Build a closure ``f(values_tuple) -> float`` for the tree."""
    tag = node[0]
    if tag == "num":
        v = float(node[2])
        return lambda vals: v
    if tag == "var":
        name = node[2]
        if name in index:
            i = index[name]
            return lambda vals: float(vals[i])
        v = consts[name]
        return lambda vals: v
    if tag == "neg":
        f = _compile_float(node[2], index, consts)
        return lambda vals: -f(vals)
    if tag in ("add", "sub", "mul", "div"):
        f = _compile_float(node[2], index, consts)
        g = _compile_float(node[3], index, consts)
        if tag == "add":
            return lambda vals: f(vals) + g(vals)
        if tag == "sub":
            return lambda vals: f(vals) - g(vals)
        if tag == "mul":
            return lambda vals: f(vals) * g(vals)

        def div(vals):
            d = g(vals)
            if d == 0.0:
                raise DomainError("division by zero")
            return f(vals) / d

        return div
    if tag == "pow":
        f = _compile_float(node[2], index, consts)
        e = node[3]
        return lambda vals: _rational_power(f(vals), e, "", float)
    if tag == "call":
        f = _compile_float(node[3], index, consts)
        name = node[2]
        if name == "sqrt":

            def sqrt(vals):
                a = f(vals)
                if a < 0:
                    raise DomainError("sqrt of a negative number")
                return math.sqrt(a)

            return sqrt
        if name == "arctan":
            return lambda vals: math.atan(f(vals))

        def tan(vals):
            a = f(vals)
            if math.cos(a) == 0.0:
                raise DomainError("tan pole")
            return math.tan(a)

        return tan
    raise AssertionError(tag)


__all__ = [
    "EvalExpr",
    "RationalFunction",
    "format_poly",
    "parse_extended",
    "parse_poly",
    "parse_rational",
    "tokenize",
]
