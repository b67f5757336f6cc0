"""Interpolation schedules and their derived coefficient functions.

A schedule bundles the four functions (alpha, beta, gamma, zeta) that define
the linear interpolation path

    Z_t = alpha(t) * Z0 + beta(t) * Z1 + gamma(t) * eta,    t in [0, 1],

with Z0 the data side (alpha(0) = 1) and Z1 the standard Gaussian side
(beta(1) = 1).  Generation integrates time from 1 down to 0.  All built-in
families share alpha = 1 - t and beta = t and differ in gamma:

    linear    gamma = 0
    sqrt      gamma = sqrt(t (1 - t))
    poly      gamma = t (1 - t)
    poly-sq   gamma = t (1 - t)^2
    quad      gamma = t^2

zeta is parameterized as  zeta(t) = zeta_const + zeta_bump * t (1 - t).

Every closed-form field expression is written in terms of the derived
coefficients

    C1 = gamma gamma' + beta' beta
    C2 = C1 alpha - C3 alpha'
    C3 = gamma^2 + beta^2
    B  = beta (alpha' beta - alpha beta') + gamma (gamma alpha' - gamma' alpha)

evaluated here once so that callers never re-derive them.  Note B = -C2
identically; both are exposed because they play different roles (C2 in the
velocity, B in the score denominator).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .exceptions import (
    NotApplicableError,
    NumericError,
    SingularTimeError,
    ValidationError,
)

__all__ = [
    "Schedule",
    "Coeffs",
    "ScheduleReport",
    "available_kinds",
    "make_schedule",
    "eval_schedule",
    "coeffs",
    "validate_schedule",
    "noise_variance",
    "regime_limit",
    "REGIME_VANISHES",
    "REGIME_FINITE",
    "REGIME_DIVERGES",
]

REGIME_VANISHES = "VANISHES"
REGIME_FINITE = "FINITE"
REGIME_DIVERGES = "DIVERGES"


def _g_zero(t):
    return np.zeros_like(np.asarray(t, dtype=float))


def _gd_zero(t):
    return np.zeros_like(np.asarray(t, dtype=float))


def _g_sqrt(t):
    t = np.asarray(t, dtype=float)
    return np.sqrt(t * (1.0 - t))


def _gd_sqrt(t):
    t = np.asarray(t, dtype=float)
    return (1.0 - 2.0 * t) / (2.0 * np.sqrt(t * (1.0 - t)))


def _g_poly(t):
    t = np.asarray(t, dtype=float)
    return t * (1.0 - t)


def _gd_poly(t):
    t = np.asarray(t, dtype=float)
    return 1.0 - 2.0 * t


def _g_polysq(t):
    t = np.asarray(t, dtype=float)
    return t * (1.0 - t) ** 2


def _gd_polysq(t):
    t = np.asarray(t, dtype=float)
    return (1.0 - t) * (1.0 - 3.0 * t)


def _g_quad(t):
    t = np.asarray(t, dtype=float)
    return t * t


def _gd_quad(t):
    t = np.asarray(t, dtype=float)
    return 2.0 * t


# kind -> (gamma, gamma')
_GAMMA_FAMILIES: dict[str, tuple[Callable, Callable]] = {
    "linear": (_g_zero, _gd_zero),
    "sqrt": (_g_sqrt, _gd_sqrt),
    "poly": (_g_poly, _gd_poly),
    "poly-sq": (_g_polysq, _gd_polysq),
    "quad": (_g_quad, _gd_quad),
}

GAMMA_FORMULAS = {
    "linear": "gamma = 0",
    "sqrt": "gamma = sqrt(t(1-t))",
    "poly": "gamma = t(1-t)",
    "poly-sq": "gamma = t(1-t)^2",
    "quad": "gamma = t^2  (violates gamma(1)=0 by design: divergence exemplar)",
}


def available_kinds() -> list[str]:
    """Names of the built-in schedule families."""
    return sorted(_GAMMA_FAMILIES)


@dataclass(frozen=True)
class Schedule:
    """Immutable schedule value object.

    ``kind`` selects the gamma family; ``params`` holds the real-valued knobs
    (currently ``zeta_const`` and ``zeta_bump``).  All evaluation methods are
    pure and accept scalars or arrays.
    """

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _GAMMA_FAMILIES:
            raise ValidationError(
                f"unknown schedule kind {self.kind!r}; available: {available_kinds()}"
            )
        unknown = set(self.params) - {"zeta_const", "zeta_bump"}
        if unknown:
            raise ValidationError(f"unknown schedule params: {sorted(unknown)}")
        for key, val in self.params.items():
            if not math.isfinite(val) or val < 0:
                raise ValidationError(f"schedule param {key}={val} must be finite and >= 0")
        object.__setattr__(self, "params", dict(self.params))

    # alpha/beta are shared by all built-in families
    def alpha(self, t):
        return 1.0 - np.asarray(t, dtype=float)

    def alpha_dot(self, t):
        return np.full_like(np.asarray(t, dtype=float), -1.0)

    def beta(self, t):
        return np.asarray(t, dtype=float) + 0.0

    def beta_dot(self, t):
        return np.ones_like(np.asarray(t, dtype=float))

    def gamma(self, t):
        return _GAMMA_FAMILIES[self.kind][0](t)

    def gamma_dot(self, t):
        return _GAMMA_FAMILIES[self.kind][1](t)

    def gamma_gamma_dot(self, t):
        """gamma * gamma' in closed form, finite at the endpoints.

        Needed because gamma' alone is unbounded at t in {0, 1} for the sqrt
        family while the product stays finite.
        """
        t = np.asarray(t, dtype=float)
        if self.kind == "linear":
            return np.zeros_like(t)
        if self.kind == "sqrt":
            return (1.0 - 2.0 * t) / 2.0
        return self.gamma(t) * self.gamma_dot(t)

    def zeta(self, t):
        t = np.asarray(t, dtype=float)
        zc = self.params.get("zeta_const", 0.0)
        zb = self.params.get("zeta_bump", 0.0)
        return zc + zb * t * (1.0 - t)

    def label(self) -> str:
        parts = [self.kind]
        for key in sorted(self.params):
            parts.append(f"{key}={self.params[key]:g}")
        return ",".join(parts)


def make_schedule(kind: str, **params: float) -> Schedule:
    """Convenience constructor used by the CLI and the experiment configs."""
    return Schedule(kind=kind, params=params)


@dataclass(frozen=True)
class Coeffs:
    """Derived coefficients at one time point."""

    c1: float
    c2: float
    c3: float
    b: float


def eval_schedule(s: Schedule, t: float):
    """Evaluate (alpha, alpha', beta, beta', gamma, gamma', zeta) at t.

    gamma' may be unbounded at t in {0, 1} for the sqrt family; the analytic
    value (inf) is returned and callers must not evaluate it there.
    """
    if not 0.0 <= t <= 1.0:
        raise SingularTimeError(f"t={t} outside [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        gd = float(s.gamma_dot(t))
    return (
        float(s.alpha(t)),
        float(s.alpha_dot(t)),
        float(s.beta(t)),
        float(s.beta_dot(t)),
        float(s.gamma(t)),
        gd,
        float(s.zeta(t)),
    )


def coeffs(s: Schedule, t: float) -> Coeffs:
    """Derived coefficients C1, C2, C3, B at time t in (0, 1].

    C3(0) = 0 makes every field expression singular there, so t = 0 is
    rejected outright.
    """
    if not 0.0 < t <= 1.0:
        raise SingularTimeError(f"coefficients are singular at t={t}; need t in (0, 1]")
    a = float(s.alpha(t))
    ad = float(s.alpha_dot(t))
    b_ = float(s.beta(t))
    bd = float(s.beta_dot(t))
    g = float(s.gamma(t))
    ggd = float(s.gamma_gamma_dot(t))
    c1 = ggd + bd * b_
    c3 = g * g + b_ * b_
    c2 = c1 * a - c3 * ad
    # gamma(gamma alpha' - gamma' alpha) written via the gamma*gamma' product,
    # which stays finite at the endpoints where gamma' alone blows up
    bcoef = b_ * (ad * b_ - a * bd) + g * g * ad - ggd * a
    return Coeffs(c1=c1, c2=c2, c3=c3, b=bcoef)


def coeffs_arrays(s: Schedule, ts: np.ndarray):
    """Vectorized (c1, c2, c3, b) over an array of times, all in (0, 1]."""
    ts = np.asarray(ts, dtype=float)
    if np.any(ts <= 0.0) or np.any(ts > 1.0):
        raise SingularTimeError("all grid times must lie in (0, 1]")
    a = s.alpha(ts)
    ad = s.alpha_dot(ts)
    b_ = s.beta(ts)
    bd = s.beta_dot(ts)
    g = s.gamma(ts)
    ggd = s.gamma_gamma_dot(ts)
    c1 = ggd + bd * b_
    c3 = g * g + b_ * b_
    c2 = c1 * a - c3 * ad
    bcoef = b_ * (ad * b_ - a * bd) + g * g * ad - ggd * a
    return c1, c2, c3, bcoef


@dataclass
class ScheduleReport:
    """Outcome of validate_schedule: one named check per line."""

    checks: list[tuple[str, bool, str]]

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def lines(self) -> list[str]:
        return [
            f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
            for name, ok, detail in self.checks
        ]


def validate_schedule(s, grid_points: int = 1000, tol: float = 1e-12) -> ScheduleReport:
    """Check the boundary and positivity conditions on a fine grid.

    Accepts any object exposing the Schedule evaluation methods so that
    deliberately broken schedules can be fed in by tests.
    """
    checks: list[tuple[str, bool, str]] = []
    interior = np.linspace(0.0, 1.0, grid_points + 1)[1:-1]

    def add(name, ok, detail):
        checks.append((name, bool(ok), detail))

    a0, a1 = float(s.alpha(0.0)), float(s.alpha(1.0))
    b0, b1 = float(s.beta(0.0)), float(s.beta(1.0))
    add("alpha(0)=1", abs(a0 - 1.0) <= tol, f"alpha(0)={a0!r}")
    add("alpha(1)=0", abs(a1) <= tol, f"alpha(1)={a1!r}")
    add("beta(0)=0", abs(b0) <= tol, f"beta(0)={b0!r}")
    add("beta(1)=1", abs(b1 - 1.0) <= tol, f"beta(1)={b1!r}")

    g0, g1 = float(s.gamma(0.0)), float(s.gamma(1.0))
    add("gamma(0)=0", abs(g0) <= tol, f"gamma(0)={g0!r}")
    add("gamma(1)=0", abs(g1) <= tol, f"gamma(1)={g1!r}")

    gi = np.asarray(s.gamma(interior), dtype=float)
    nonneg = np.all(gi >= 0.0)
    add("gamma>=0 on (0,1)", nonneg, f"min gamma={gi.min()!r}")
    all_zero = np.all(gi == 0.0)
    all_pos = np.all(gi > 0.0)
    add(
        "gamma identically 0 or strictly positive on (0,1)",
        all_zero or all_pos,
        "gamma==0 everywhere" if all_zero else f"min gamma={gi.min()!r}",
    )

    zi = np.asarray(s.zeta(np.linspace(0.0, 1.0, grid_points + 1)), dtype=float)
    add("zeta>=0 on [0,1]", np.all(zi >= 0.0), f"min zeta={zi.min()!r}")

    # derivative consistency against central differences at interior points
    h = 1e-6
    probe = np.linspace(0.05, 0.95, 19)
    ok_d = True
    worst = 0.0
    for name, f, fd in (
        ("alpha", s.alpha, s.alpha_dot),
        ("beta", s.beta, s.beta_dot),
        ("gamma", s.gamma, s.gamma_dot),
    ):
        exact = np.asarray(fd(probe), dtype=float)
        approx = (np.asarray(f(probe + h), float) - np.asarray(f(probe - h), float)) / (2 * h)
        scale = np.maximum(np.abs(exact), 1.0)
        rel = np.max(np.abs(exact - approx) / scale)
        worst = max(worst, float(rel))
        ok_d = ok_d and rel <= 1e-6
    add("derivatives match central differences", ok_d, f"worst rel err={worst:.2e}")

    return ScheduleReport(checks=checks)


def _adaptive_simpson(f, a: float, b: float, tol: float = 1e-12, max_depth: int = 40) -> float:
    """Adaptive Simpson quadrature of f over [a, b]."""

    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, eps, depth):
        xm = 0.5 * (x0 + x2)
        xl, xr = 0.5 * (x0 + xm), 0.5 * (xm + x2)
        fl, fr = f(xl), f(xr)
        if not (math.isfinite(fl) and math.isfinite(fr)):
            raise NumericError("non-finite integrand sample in quadrature")
        left = simpson(x0, xm, f0, fl, f1)
        right = simpson(xm, x2, f1, fr, f2)
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return recurse(x0, xm, f0, fl, f1, left, eps / 2.0, depth + 1) + recurse(
            xm, x2, f1, fr, f2, right, eps / 2.0, depth + 1
        )

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    if not all(math.isfinite(v) for v in (fa, fm, fb)):
        raise NumericError("non-finite integrand sample in quadrature")
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, 0)


def noise_variance(s, tol: float = 1e-10) -> float:
    """Terminal noise variance 2 * integral of zeta over [0, 1]."""
    val = _adaptive_simpson(lambda t: float(s.zeta(t)), 0.0, 1.0, tol=min(tol, 1e-12))
    return 2.0 * val


def regime_limit(
    s: Schedule,
    grid: np.ndarray | None = None,
    slope_tol: float = 0.1,
) -> str:
    """Classify the t->0 limit of C3(t) / (C1(t) gamma(t)).

    Fits the slope of log(ratio) against log(t) on a geometric grid spanning
    1e-2 .. 1e-8.  Positive slope means the ratio vanishes (endpoints converge
    to the training set under gamma-scaled errors), near-zero slope means a
    finite limit (vicinity), negative slope means divergence.
    """
    probe = np.asarray(s.gamma(np.linspace(0.1, 0.9, 9)), dtype=float)
    if np.any(probe <= 0.0):
        raise NotApplicableError("regime_limit requires gamma > 0 on (0, 1)")
    if grid is None:
        grid = np.geomspace(1e-2, 1e-8, 25)
    grid = np.asarray(grid, dtype=float)
    c1, _, c3, _ = coeffs_arrays(s, grid)
    g = np.asarray(s.gamma(grid), dtype=float)
    ratio = c3 / (c1 * g)
    if not np.all(np.isfinite(ratio)):
        raise NumericError("non-finite ratio while classifying regime")
    slope = np.polyfit(np.log(grid), np.log(ratio), 1)[0]
    if slope > slope_tol:
        return REGIME_VANISHES
    if slope < -slope_tol:
        return REGIME_DIVERGES
    return REGIME_FINITE
