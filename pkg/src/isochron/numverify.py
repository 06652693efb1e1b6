"""Numerical cross-checks: orbits, periods, integral drift and linearizations.

The integrator is a Dormand-Prince 5(4) pair with PI step-size control.
Everything here runs in double precision; the exact checks live in
:mod:`isochron.lienard` and are meant to agree with these.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from .errors import (
    BlowUp,
    DomainError,
    DomainErrorOnOrbit,
    InsufficientSamples,
    NoReturnDetected,
    StepSizeUnderflow,
)
from .exprparse import EvalExpr, parse_extended
from .polyalg import ParamPoly

DEFAULT_TOL = 1e-10
BLOWUP_NORM = 1e6
NEIGHBORHOOD = 0.8

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


# ---------------------------------------------------------------------------
# numeric fields


class NumericField:
    """Float evaluator of a polynomial vector field at fixed parameter values."""

    def __init__(self, fld, bindings: Mapping | None = None):
        bindings = dict(bindings or {})
        if hasattr(fld, "field") and callable(fld.field):
            bindings = {**fld.constants, **bindings}
            fld = fld.field()
        self.source = fld
        ix, iy = fld.ring.index["x"], fld.ring.index["y"]
        self._comps = []
        for comp in (fld.xdot, fld.ydot):
            terms = {}
            for exp, c in comp.terms():
                coef = float(c)
                for name, e in zip(comp.ring.names, exp):
                    if e and name not in ("x", "y"):
                        if name not in bindings:
                            raise DomainError(f"parameter {name!r} has no numeric value")
                        coef *= float(bindings[name]) ** e
                key = (exp[ix], exp[iy])
                terms[key] = terms.get(key, 0.0) + coef
            self._comps.append(tuple((i, j, c) for (i, j), c in terms.items() if c != 0.0))

    def __call__(self, x: float, y: float):
        out = []
        for terms in self._comps:
            s = 0.0
            for i, j, c in terms:
                s += c * x**i * y**j
            out.append(s)
        return out[0], out[1]


def as_numeric(fld, bindings: Mapping | None = None) -> Callable:
    if isinstance(fld, NumericField) or (callable(fld) and not hasattr(fld, "xdot") and not hasattr(fld, "field")):
        return fld
    return NumericField(fld, bindings)


# ---------------------------------------------------------------------------
# integrator


def _dopri_step(f, t, z, fz, h):
    ks = [fz]
    for i in range(1, 7):
        a = _A[i]
        zi = (
            z[0] + h * sum(a[k] * ks[k][0] for k in range(i)),
            z[1] + h * sum(a[k] * ks[k][1] for k in range(i)),
        )
        ks.append(f(*zi))
    z_new = (
        z[0] + h * sum(_B[k] * ks[k][0] for k in range(7)),
        z[1] + h * sum(_B[k] * ks[k][1] for k in range(7)),
    )
    # the last stage is f at z_new (FSAL)
    err = (
        h * sum(_E[k] * ks[k][0] for k in range(7)),
        h * sum(_E[k] * ks[k][1] for k in range(7)),
    )
    return z_new, ks[6], err


class _Stepper:
    """Adaptive stepping; yields (t0, z0, f0, t1, z1, f1) for every accepted step."""

    SAFETY = 0.9
    BETA = 0.04
    ALPHA = 0.2 - 0.75 * 0.04
    FAC_MIN, FAC_MAX = 0.2, 10.0

    def __init__(self, f, z0, tol, h0=None, direction=1.0):
        self.f = f
        self.tol = tol
        self.t = 0.0
        self.z = (float(z0[0]), float(z0[1]))
        self.fz = f(*self.z)
        self.h = direction * (h0 or min(0.01, 0.1 * tol ** 0.2))
        self.err_prev = 1e-4
        self.accepted = 0
        self.rejected = 0

    def _norm(self, z, zn, err):
        total = 0.0
        for k in range(2):
            sc = 0.1 * self.tol * (1.0 + max(abs(z[k]), abs(zn[k])))
            total += (err[k] / sc) ** 2
        return math.sqrt(total / 2)

    def step(self, h_max=None):
        while True:
            h = self.h
            if h_max is not None and abs(h) > h_max:
                h = math.copysign(h_max, h)
            if abs(h) < 1e-14 * max(1.0, abs(self.t)):
                raise StepSizeUnderflow(f"step size {h:.3g} at t={self.t:.6g}")
            try:
                zn, fn, err = _dopri_step(self.f, self.t, self.z, self.fz, h)
            except OverflowError:
                raise BlowUp(f"overflow near t={self.t:.6g}") from None
            if not all(math.isfinite(v) for v in zn + fn) or math.hypot(*zn) > BLOWUP_NORM:
                if abs(h) < 1e-3 and math.hypot(*self.z) > BLOWUP_NORM / 10:
                    raise BlowUp(f"state norm exceeded {BLOWUP_NORM:g} near t={self.t:.6g}")
                self.h = h * self.FAC_MIN
                self.rejected += 1
                continue
            e = self._norm(self.z, zn, err)
            if e <= 1.0:
                e = max(e, 1e-10)
                fac = self.SAFETY * e ** (-self.ALPHA) * self.err_prev ** self.BETA
                fac = min(self.FAC_MAX, max(self.FAC_MIN, fac))
                self.err_prev = e
                rec = (self.t, self.z, self.fz, self.t + h, zn, fn)
                self.t, self.z, self.fz = self.t + h, zn, fn
                self.h = h * fac
                self.accepted += 1
                return rec
            fac = max(self.FAC_MIN, self.SAFETY * e ** (-self.ALPHA))
            self.h = h * fac
            self.rejected += 1


@dataclass
class Orbit:
    times: list
    states: list
    stats: dict = field(default_factory=dict)

    @property
    def end(self):
        return self.states[-1]


def _check_start(x0, neighborhood):
    if neighborhood is not None and math.hypot(*x0) > neighborhood:
        raise ValueError(f"start point {x0} outside the neighborhood radius {neighborhood}")


def integrate_orbit(
    fld,
    x0,
    tol: float = DEFAULT_TOL,
    tmax: float = 2 * math.pi,
    *,
    bindings: Mapping | None = None,
    neighborhood: float | None = NEIGHBORHOOD,
) -> Orbit:
    if not 1e-13 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-13, 1e-6]")
    _check_start(x0, neighborhood)
    f = as_numeric(fld, bindings)
    st = _Stepper(f, x0, tol)
    times, states = [0.0], [st.z]
    while st.t < tmax:
        rec = st.step(h_max=tmax - st.t)
        times.append(rec[3])
        states.append(rec[4])
    return Orbit(times, states, {"steps": st.accepted, "rejected": st.rejected, "tol": tol})


def _hermite(t0, y0, d0, t1, y1, d1, t):
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


@dataclass(frozen=True)
class PeriodMeasurement:
    amplitude: float
    period: float
    residual: float
    return_distance: float


def _refine_crossing(f, rec, tol):
    """Time in the step ``rec`` where y vanishes, polished on the true flow."""
    t0, z0, f0, t1, z1, f1 = rec
    lo, hi = t0, t1
    ylo = z0[1]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ym = _hermite(t0, z0[1], f0[1], t1, z1[1], f1[1], mid)
        if (ym < 0) == (ylo < 0):
            lo, ylo = mid, ym
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    z = z0
    for _ in range(8):
        z, _, _ = _dopri_step(f, t0, z0, f0, t - t0)
        dy = f(*z)[1]
        if dy == 0:
            break
        dt = -z[1] / dy
        t += dt
        if abs(z[1]) < tol * 1e-3:
            break
    z, _, _ = _dopri_step(f, t0, z0, f0, t - t0)
    return t, z


def measure_period(
    fld,
    amplitude: float,
    tol: float = DEFAULT_TOL,
    *,
    bindings: Mapping | None = None,
    tmax: float = 200.0,
    neighborhood: float | None = NEIGHBORHOOD,
) -> PeriodMeasurement:
    """Return time to the section {y = 0, x > 0} starting from (amplitude, 0)."""
    if amplitude <= 0:
        raise ValueError("amplitude must be positive")
    _check_start((amplitude, 0.0), neighborhood)
    f = as_numeric(fld, bindings)
    st = _Stepper(f, (amplitude, 0.0), tol)
    up = st.fz[1] > 0
    if st.fz[1] == 0:
        raise NoReturnDetected("start point is an equilibrium or tangent to the section")
    while st.t < tmax:
        rec = st.step(h_max=min(0.25, tmax - st.t))
        y0, y1 = rec[1][1], rec[4][1]
        crossed = (y0 < 0 <= y1) if up else (y0 > 0 >= y1)
        if crossed and rec[4][0] > 0 and rec[0] > 0:
            t, z = _refine_crossing(f, rec, tol)
            return PeriodMeasurement(amplitude, t, abs(z[1]), abs(z[0] - amplitude))
    raise NoReturnDetected(f"no return to the section within t={tmax}")


@dataclass(frozen=True)
class ScanResult:
    periods: dict
    spread: float


def isochronicity_scan(fld, amplitudes: Iterable[float], tol: float = DEFAULT_TOL, *, bindings=None) -> ScanResult:
    f = as_numeric(fld, bindings)
    periods = {a: measure_period(f, a, tol).period for a in amplitudes}
    if not periods:
        raise ValueError("need at least one amplitude")
    return ScanResult(periods, max(periods.values()) - min(periods.values()))


def scan_to_csv(scan: ScanResult) -> str:
    lines = ["amplitude,period"]
    lines += [f"{a!r},{T!r}" for a, T in sorted(scan.periods.items())]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# first integrals and linearizations


def _as_float_fn(expr, constants=None):
    if isinstance(expr, str):
        expr = parse_extended(expr)
    if isinstance(expr, EvalExpr):
        return expr.compile(("x", "y"), constants)
    if isinstance(expr, ParamPoly):
        return parse_extended(str(expr)).compile(("x", "y"), constants)
    return expr


def integral_drift(orbit: Orbit, H, *, constants=None, eps: float = 1e-300) -> float:
    fn = _as_float_fn(H, constants)
    try:
        values = [fn(x, y) for x, y in orbit.states]
    except (DomainError, ZeroDivisionError, ValueError) as exc:
        raise DomainErrorOnOrbit(str(exc)) from None
    ref = values[0]
    scale = max(abs(ref), eps)
    return max(abs(v - ref) for v in values) / scale


def _shifted(f, z, fz, h):
    return _dopri_step(f, 0.0, z, fz, h)[0]


@dataclass(frozen=True)
class LinearizationDefect:
    samples: int
    worst: float


def linearization_defect(
    fld,
    u,
    v,
    x0,
    *,
    bindings: Mapping | None = None,
    constants: Mapping | None = None,
    sample_filter: Callable | None = None,
    tmax: float = 2 * math.pi,
    delta: float = 1e-3,
    min_samples: int = 10,
) -> LinearizationDefect:
    """Largest of |u' + v|, |v' - u| and the drift of u^2 + v^2 along an orbit.

    Time derivatives are fourth-order central differences. Samples where
    ``sample_filter(x, y)`` is false, or where u or v cannot be evaluated
    anywhere on the difference stencil, are skipped.
    """
    f = as_numeric(fld, bindings)
    fu, fv = _as_float_fn(u, constants), _as_float_fn(v, constants)
    orbit = integrate_orbit(f, x0, 1e-12, tmax, neighborhood=None)
    r0 = None
    used = 0
    worst = 0.0
    for z in orbit.states:
        if sample_filter is not None and not sample_filter(*z):
            continue
        fz = f(*z)
        stencil = [_shifted(f, z, fz, k * delta) for k in (-2, -1, 1, 2)]
        if sample_filter is not None and not all(sample_filter(*w) for w in stencil):
            continue
        try:
            us = [fu(*w) for w in stencil]
            vs = [fv(*w) for w in stencil]
            uz, vz = fu(*z), fv(*z)
        except (DomainError, ZeroDivisionError, ValueError):
            continue
        du = (us[0] - 8 * us[1] + 8 * us[2] - us[3]) / (12 * delta)
        dv = (vs[0] - 8 * vs[1] + 8 * vs[2] - vs[3]) / (12 * delta)
        r = uz * uz + vz * vz
        if r0 is None:
            r0 = r
        worst = max(worst, abs(du + vz), abs(dv - uz), abs(r - r0))
        used += 1
    if used < min_samples:
        raise InsufficientSamples(f"only {used} usable samples (need {min_samples})")
    return LinearizationDefect(used, worst)


def numeric_linearization_check(fld, u, v, x0, tol: float = 1e-6, **kwargs) -> bool:
    """True iff (u, v) numerically conjugates the flow to u' = -v, v' = u within ``tol``."""
    return linearization_defect(fld, u, v, x0, **kwargs).worst < tol


__all__ = [
    "LinearizationDefect",
    "NumericField",
    "Orbit",
    "PeriodMeasurement",
    "ScanResult",
    "integral_drift",
    "integrate_orbit",
    "isochronicity_scan",
    "linearization_defect",
    "measure_period",
    "numeric_linearization_check",
    "scan_to_csv",
]
