"""Command-line front end.

Subcommands: reduce, conditions, verify, groebner, period, bench.
Exit codes: 0 pass, 1 verification failed, 2 usage or parse error,
3 resource limit.
"""
from __future__ import annotations

import argparse
import contextlib
import hashlib
import json
import signal
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .calgorithm import generate_sys, verify_candidate
from .catalog import constant, get_record, instantiate, verification_battery
from .errors import (
    ExpressionSyntaxError,
    IsochronError,
    MalformedSystem,
    ResourceLimit,
    UnknownFamily,
)
from .exprparse import parse_poly
from .groebner import DEFAULT_MAX_DEGREE, DEFAULT_MAX_PAIRS, buchberger
from .lienard import CASE2, STATE, PlanarField, PlanarSystem, _divide_by, reduce_to_lienard
from .polyalg import DRL, LEX, PolyRing, as_rational, format_poly

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3
SPREAD_TOLERANCE = 1e-6


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# system documents


@dataclass
class SystemDocument:
    system: PlanarSystem
    text: str
    path: str = ""

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()


def _shape_error() -> MalformedSystem:
    return MalformedSystem("shape not Case1/Case2")


def parse_system_document(text: str, path: str = "") -> SystemDocument:
    """Build a system from a YAML document.

    Keys: ``shape`` (case1, case2 or auto), ``variables`` (must be x, y),
    ``parameters``, ``polynomials`` with either xdot/ydot, A/B/C or P, and an
    optional ``constants`` map from parameter names to catalog constant ids.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise UsageError(f"{path or 'document'}: not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"{path or 'document'}: expected a mapping at top level")
    variables = tuple(doc.get("variables", STATE))
    if variables != STATE:
        raise UsageError(f"variables must be [x, y], got {list(variables)}")
    params = tuple(str(p) for p in doc.get("parameters", []) or [])
    consts = {str(k): str(v) for k, v in (doc.get("constants") or {}).items()}
    names = params + tuple(k for k in consts if k not in params)
    ring = PolyRing(STATE + names)
    polys = doc.get("polynomials") or {}
    shape = str(doc.get("shape", "auto")).lower()

    def poly(key):
        if key not in polys:
            raise UsageError(f"polynomials.{key} is missing")
        return parse_poly(str(polys[key]), ring=ring)

    x, y = ring.gen("x"), ring.gen("y")
    if "xdot" in polys or "ydot" in polys:
        fld = PlanarField(poly("xdot"), poly("ydot"))
    elif shape == "case1" or "A" in polys:
        fld = PlanarField(-y * poly("A"), poly("B") + poly("C") * y * y)
    elif shape == "case2" or "P" in polys:
        fld = PlanarField(-y, x * (1 + poly("P")))
    else:
        raise UsageError("polynomials need xdot/ydot, A/B/C or P")

    values = {}
    for name, cid in consts.items():
        values[name] = constant(cid).evaluate()
    try:
        system = PlanarSystem.from_field(fld, name=str(doc.get("name", path)), constants=values)
    except MalformedSystem:
        raise _shape_error() from None
    if shape == "case2" and system.shape != shape:
        # a field can fit both shapes; honour the declared one
        if fld.xdot != -y:
            raise _shape_error()
        try:
            P = _divide_by(fld.ydot - x, "x")
            system = PlanarSystem(CASE2, ring, P=P, name=system.name, constants=values)
        except MalformedSystem:
            raise _shape_error() from None
    elif shape == "case1" and system.shape != shape:
        raise _shape_error()
    return SystemDocument(system, text, path)


def load_system_document(path: str) -> SystemDocument:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    return parse_system_document(p.read_text(), str(p))


def parse_bindings(text: str | None) -> dict:
    """``a=1,b=-1/3`` -> {"a": Fraction(1), "b": Fraction(-1, 3)}."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise UsageError(f"binding {item!r} is not of the form name=value")
        try:
            out[name.strip()] = as_rational(value.strip())
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"binding {item!r}: {value!r} is not an exact number") from None
    return out


def parse_list(text: str | None, kind, what: str) -> list:
    if text is None:
        return []
    try:
        return [kind(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad {what} list {text!r}") from None


# ---------------------------------------------------------------------------
# reports


@dataclass
class RunReport:
    command: list
    inputs_digest: str
    checks: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    # keys of ``data`` left out of the human-readable text
    json_only: set = field(default_factory=set)

    @property
    def verdict(self) -> str:
        return "pass" if all(c["passed"] for c in self.checks) else "fail"

    def add(self, name, passed, residual=None, seconds=None, detail=""):
        entry = {"name": name, "passed": bool(passed), "residual": _jsonable(residual), "detail": detail}
        if seconds is not None:
            entry["seconds"] = seconds
        self.checks.append(entry)

    def to_json(self) -> str:
        body = {
            "command": self.command,
            "inputs_digest": self.inputs_digest,
            "checks": self.checks,
            "data": _jsonable(self.data),
            "verdict": self.verdict,
        }
        return json.dumps(body, sort_keys=True, indent=2)

    def to_text(self) -> str:
        lines = []
        for key in sorted(set(self.data) - self.json_only):
            value = self.data[key]
            if isinstance(value, (list, tuple)):
                lines.append(f"{key}:")
                lines.extend(f"  {_text(v)}" for v in value)
            elif isinstance(value, dict):
                lines.append(f"{key}:")
                lines.extend(f"  {k} = {_text(v)}" for k, v in value.items())
            else:
                lines.append(f"{key}: {_text(value)}")
        for c in self.checks:
            mark = "PASS" if c["passed"] else "FAIL"
            res = "" if c["residual"] is None else f"  residual={c['residual']}"
            lines.append(f"[{mark}] {c['name']}{res}  {c['detail']}".rstrip())
        if self.checks:
            lines.append(f"verdict: {self.verdict}")
        return "\n".join(lines)

    @property
    def exit_code(self) -> int:
        return EXIT_PASS if self.verdict == "pass" else EXIT_FAIL


def _text(value) -> str:
    if isinstance(value, float):
        return f"{value:.15g}"
    return str(value)


def _jsonable(value):
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return str(value)


def _digest(*parts) -> str:
    return hashlib.sha256("\n".join(map(str, parts)).encode()).hexdigest()


@contextlib.contextmanager
def deadline(seconds: float | None):
    """Raise ResourceLimit when the block runs longer than ``seconds``."""
    if not seconds or not hasattr(signal, "setitimer"):
        yield
        return

    def expire(signum, frame):
        raise ResourceLimit(f"time limit of {seconds}s exceeded")

    old = signal.signal(signal.SIGALRM, expire)
    signal.setitimer(signal.ITIMER_REAL, seconds)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


# ---------------------------------------------------------------------------
# commands


def cmd_reduce(args) -> RunReport:
    doc = load_system_document(args.file)
    lien = reduce_to_lienard(doc.system)
    report = RunReport(_argv(args), doc.digest)
    report.data["shape"] = doc.system.shape
    report.data["f"] = _fraction(lien.f)
    report.data["g"] = _fraction(lien.g)
    bundle = lien.bundle(max(args.terms + 1, 4))
    report.data["f_series"] = _series(bundle.f, args.terms)
    report.data["g_series"] = _series(bundle.g, args.terms)
    return report


def _fraction(r) -> str:
    num = format_poly(r.num)
    if r.den.is_constant() and r.den.constant_value() == 1:
        return num
    return f"({num})/({format_poly(r.den)})"


def _series(s, terms: int) -> str:
    parts = []
    for k in range(min(terms, s.order)):
        c = s[k]
        if c.is_zero():
            continue
        mono = "1" if k == 0 else ("x" if k == 1 else f"x^{k}")
        parts.append(f"({format_poly(c)})*{mono}")
    tail = f"O(x^{min(terms, s.order)})"
    return " + ".join(parts + [tail])


def cmd_conditions(args) -> RunReport:
    if args.order < 1:
        raise UsageError("--order must be at least 1")
    doc = load_system_document(args.file)
    t0 = time.perf_counter()
    with deadline(args.time_limit):
        res = generate_sys(doc.system, args.order, cross_check=args.cross_check)
    report = RunReport(_argv(args), doc.digest)
    report.data["order"] = args.order
    report.data["conditions"] = [format_poly(p) for p in res.conditions]
    report.data["urabe"] = {f"c{k}": format_poly(v) for k, v in sorted(res.urabe.items())}
    report.data["seconds"] = time.perf_counter() - t0
    return report


def _resolve_target(target: str, bindings: dict):
    """(system, record id or None, digest) for a file path or a family id."""
    if Path(target).is_file():
        doc = load_system_document(target)
        system = doc.system
        unknown = [k for k in bindings if k not in system.params]
        if unknown:
            raise UsageError(f"unknown parameters {unknown}; have {list(system.params)}")
        return system.specialize(bindings), None, doc.digest
    try:
        rec = get_record(target)
    except UnknownFamily:
        raise UsageError(f"{target!r} is neither a file nor a catalog family") from None
    full = rec.default_bindings()
    full.update(bindings)
    return instantiate(rec.id, full), rec.id, _digest(rec.id, sorted(full.items()))


def cmd_verify(args) -> RunReport:
    if args.order < 1:
        raise UsageError("--order must be at least 1")
    bindings = parse_bindings(args.at)
    amps = parse_list(args.amplitudes, float, "amplitude") or None
    if Path(args.target).is_file():
        system, _, digest = _resolve_target(args.target, bindings)
        report = RunReport(_argv(args), digest)
        t0 = time.perf_counter()
        with deadline(args.time_limit):
            rep = verify_candidate(system, {}, args.order)
        report.add("sys", rep.passed, rep.max_residual(), time.perf_counter() - t0, f"m={args.order}")
        report.data["urabe"] = {f"c{k}": v for k, v in sorted(rep.urabe.items())}
        if not args.no_numeric:
            _scan_into(report, system, amps or [0.1, 0.2, 0.3, 0.4, 0.5], args.tol)
        return report
    try:
        rec = get_record(args.target)
    except UnknownFamily:
        raise UsageError(f"{args.target!r} is neither a file nor a catalog family") from None
    with deadline(args.time_limit):
        battery = verification_battery(rec.id, bindings, args.order, amplitudes=amps, numeric=not args.no_numeric)
    report = RunReport(_argv(args), _digest(rec.id, sorted(battery.bindings.items())))
    report.data["family"] = rec.id
    report.data["bindings"] = battery.bindings
    for c in battery.checks:
        report.add(c.name, c.passed, c.residual, c.seconds, c.detail)
    return report


def _scan_into(report: RunReport, system, amplitudes, tol):
    from .numverify import isochronicity_scan

    t0 = time.perf_counter()
    try:
        scan = isochronicity_scan(system, amplitudes, tol)
    except IsochronError as exc:
        report.add("isochronicity_scan", False, None, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}")
        return None
    report.add("isochronicity_scan", scan.spread < SPREAD_TOLERANCE, scan.spread, time.perf_counter() - t0,
               f"amplitudes {list(amplitudes)}")
    report.data["periods"] = {repr(a): T for a, T in sorted(scan.periods.items())}
    return scan


def cmd_period(args) -> RunReport:
    bindings = parse_bindings(args.at)
    amps = parse_list(args.amplitudes, float, "amplitude")
    if not amps:
        raise UsageError("--amplitudes must not be empty")
    system, _, digest = _resolve_target(args.target, bindings)
    report = RunReport(_argv(args), digest)
    scan = _scan_into(report, system, amps, args.tol)
    if scan is not None and args.csv:
        from .numverify import scan_to_csv

        Path(args.csv).write_text(scan_to_csv(scan))
        report.data["csv"] = args.csv
    return report


def cmd_groebner(args) -> RunReport:
    text = Path(args.file).read_text() if Path(args.file).is_file() else None
    if text is None:
        raise UsageError(f"no such file: {args.file}")
    doc = yaml.safe_load(text)
    if isinstance(doc, dict) and "generators" in doc:
        names = tuple(doc.get("variables") or [])
        if not names:
            raise UsageError("variables must be a non-empty list")
        ring = PolyRing(names)
        gens = [parse_poly(str(g), ring=ring) for g in doc["generators"]]
    else:
        if args.sys_order is None:
            raise UsageError("a system document needs --sys-order to build Sys(m)")
        sysdoc = parse_system_document(text, args.file)
        with deadline(args.time_limit):
            res = generate_sys(sysdoc.system, args.sys_order)
        gens = res.conditions
        if not gens:
            raise UsageError(f"Sys({args.sys_order}) is empty")
    order = {"drl": DRL, "degrevlex": DRL, "lex": LEX}.get(args.monomial_order)
    t0 = time.perf_counter()
    gb = buchberger(gens, order, max_pairs=args.pair_limit, max_degree=args.degree_limit, time_limit=args.time_limit)
    report = RunReport(_argv(args), hashlib.sha256(text.encode()).hexdigest())
    report.data["order"] = order
    report.data["basis"] = [format_poly(g) for g in gb]
    report.data["unit_ideal"] = gb.is_unit_ideal()
    report.data["seconds"] = time.perf_counter() - t0
    return report


def cmd_bench(args) -> RunReport:
    orders = parse_list(args.orders, int, "order")
    if not orders:
        raise UsageError("--orders must not be empty")
    if min(orders) < 1:
        raise UsageError("orders must be at least 1")
    doc = load_system_document(args.file)
    report = RunReport(_argv(args), doc.digest)
    rows = []
    for m in orders:
        t0 = time.perf_counter()
        with deadline(args.time_limit):
            res = generate_sys(doc.system, m)
        dt = time.perf_counter() - t0
        h = hashlib.sha256("\n".join(format_poly(p) for p in res.conditions).encode()).hexdigest()[:16]
        rows.append({"order": m, "seconds": dt, "conditions": len(res.conditions), "hash": h})
    report.data["timings"] = [f"m={r['order']}  {r['seconds']:.4f}s  |Sys|={r['conditions']}  {r['hash']}" for r in rows]
    report.data["rows"] = rows
    report.json_only.add("rows")
    return report


def _argv(args) -> list:
    return list(getattr(args, "argv", []))


# ---------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="isochron", description="Isochronous center toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, limits=True):
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        if limits:
            sp.add_argument("--time-limit", type=float, default=None, metavar="SECONDS")
            sp.add_argument("--pair-limit", type=int, default=DEFAULT_MAX_PAIRS)

    r = sub.add_parser("reduce", help="print the Lienard form of a system")
    r.add_argument("file")
    r.add_argument("--terms", type=int, default=6, help="series terms to print")
    common(r, limits=False)
    r.set_defaults(func=cmd_reduce)

    c = sub.add_parser("conditions", help="compute Sys(m) and Urabe coefficients")
    c.add_argument("file")
    c.add_argument("--order", "-m", type=int, default=3)
    c.add_argument("--cross-check", action="store_true", help="repeat with a longer truncation")
    common(c)
    c.set_defaults(func=cmd_conditions)

    v = sub.add_parser("verify", help="verify a catalog family or a system file")
    v.add_argument("target", help="family id or system file")
    v.add_argument("--at", help="bindings such as a=1,b=1/3")
    v.add_argument("--order", "-m", type=int, default=6)
    v.add_argument("--amplitudes", help="comma-separated starting amplitudes")
    v.add_argument("--tol", type=float, default=1e-10)
    v.add_argument("--no-numeric", action="store_true")
    common(v)
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("groebner", help="reduced Groebner basis of generators or of Sys(m)")
    g.add_argument("file")
    g.add_argument("--monomial-order", choices=["drl", "degrevlex", "lex"], default="drl")
    g.add_argument("--sys-order", type=int, default=None, help="use Sys(m) of a system document")
    g.add_argument("--degree-limit", type=int, default=DEFAULT_MAX_DEGREE)
    common(g)
    g.set_defaults(func=cmd_groebner)

    t = sub.add_parser("period", help="measure periods over a list of amplitudes")
    t.add_argument("target", help="family id or system file")
    t.add_argument("--at")
    t.add_argument("--amplitudes", default="0.1,0.2,0.3,0.4,0.5")
    t.add_argument("--tol", type=float, default=1e-10)
    t.add_argument("--csv", help="write amplitude,period rows to this file")
    common(t, limits=False)
    t.set_defaults(func=cmd_period)

    b = sub.add_parser("bench", help="time generate_sys over several orders")
    b.add_argument("file")
    b.add_argument("--orders", default="1,2,3,4")
    common(b)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        report = args.func(args)
    except ResourceLimit as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (UsageError, ExpressionSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IsochronError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(report.to_json() if args.json else report.to_text())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
