"""Pressure profiles and the local wave functions built from them.

A profile is the scalar function p on (0, inf) together with its first
three derivatives.  Everything downstream (critical density a*(c), the
local component g_c, the growth gauge W_delta) is evaluated through the
callables stored here, so a profile is the single object parametrizing
the whole problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import BracketError, ConfigError, EvaluationError

__all__ = [
    "PressureLaw",
    "AdmissibilityReport",
    "power_law",
    "log_law",
    "inverse_law",
    "custom_law",
    "validate_admissibility",
    "a_star",
    "g_c",
    "w_delta",
]


@dataclass(frozen=True)
class PressureLaw:
    """Profile p with derivatives dp, d2p, d3p, all defined on (0, inf).

    Instances are immutable; the callables must be pure.
    """

    p: Callable[[float], float]
    dp: Callable[[float], float]
    d2p: Callable[[float], float]
    d3p: Callable[[float], float]
    label: str = "custom"


def power_law(gamma: float, kappa: float) -> PressureLaw:
    """Profile of the power pressure kappa*rho^gamma (gamma != 1).

    p(rho) = gamma*kappa/(gamma-1) * rho^(gamma-1).
    gamma=2, kappa=1/2 gives p(rho) = rho.
    """
    if gamma == 1.0:
        return log_law(kappa)
    if gamma <= 0 or kappa <= 0:
        raise ConfigError("power_law requires gamma > 0 and kappa > 0")
    a = gamma * kappa / (gamma - 1.0)
    g = gamma - 1.0
    return PressureLaw(
        p=lambda x: a * x**g,
        dp=lambda x: a * g * x ** (g - 1),
        d2p=lambda x: a * g * (g - 1) * x ** (g - 2),
        d3p=lambda x: a * g * (g - 1) * (g - 2) * x ** (g - 3),
        label=f"power(gamma={gamma}, kappa={kappa})",
    )


def log_law(kappa: float) -> PressureLaw:
    """Profile of the isothermal pressure kappa*log: p(rho) = kappa*log(rho)."""
    if kappa <= 0:
        raise ConfigError("log_law requires kappa > 0")
    return PressureLaw(
        p=lambda x: kappa * np.log(x),
        dp=lambda x: kappa / x,
        d2p=lambda x: -kappa / x**2,
        d3p=lambda x: 2 * kappa / x**3,
        label=f"log(kappa={kappa})",
    )


def inverse_law(kappa: float) -> PressureLaw:
    """Profile p(rho) = -kappa/rho."""
    if kappa <= 0:
        raise ConfigError("inverse_law requires kappa > 0")
    return PressureLaw(
        p=lambda x: -kappa / x,
        dp=lambda x: kappa / x**2,
        d2p=lambda x: -2 * kappa / x**3,
        d3p=lambda x: 6 * kappa / x**4,
        label=f"inverse(kappa={kappa})",
    )


def custom_law(p, dp, d2p, d3p, label="custom") -> PressureLaw:
    return PressureLaw(p=p, dp=dp, d2p=d2p, d3p=d3p, label=label)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Result of sampling the admissibility conditions of a profile."""

    sample_range: tuple[float, float]
    checks: list = field(default_factory=list)  # (name, passed, witness or None)
    w_trend: list = field(default_factory=list)  # (xi, W_delta(xi)) pairs

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)


def _eval_checked(fn, xi, name):
    v = float(fn(xi))
    if not math.isfinite(v):
        raise EvaluationError(f"{name} is not finite at xi={xi!r}", xi=xi)
    return v


def validate_admissibility(
    law: PressureLaw, xi_min: float, xi_max: float, n_samples: int = 64
) -> AdmissibilityReport:
    """Sample the admissibility conditions on log-spaced points.

    Checked conditions:
      dp_positive          dp(xi) > 0 at every sample
      convexity_combo      3*dp(xi) + xi*d2p(xi) > 0 at every sample
      cubic_decay          xi^3*dp(xi) decreases monotonically as xi
                           descends toward xi_min (trend check)
      w_growth             W_delta increases over the top decade of the sample

    The two limit conditions are asymptotic, so they are verified as
    monotone trends on the sampled range only.
    """
    if not (0 < xi_min < 1 < xi_max):
        raise ConfigError("require 0 < xi_min < 1 < xi_max")
    if n_samples < 16:
        raise ConfigError("n_samples must be at least 16")

    xs = np.geomspace(xi_min, xi_max, n_samples)
    checks = []

    dp_vals = np.array([_eval_checked(law.dp, x, "dp") for x in xs])
    bad = np.where(dp_vals <= 0)[0]
    checks.append(("dp_positive", bad.size == 0, float(xs[bad[0]]) if bad.size else None))

    combo = np.array([3 * dv + x * _eval_checked(law.d2p, x, "d2p") for x, dv in zip(xs, dp_vals)])
    bad = np.where(combo <= 0)[0]
    checks.append(("convexity_combo", bad.size == 0, float(xs[bad[0]]) if bad.size else None))

    # xi^3 dp(xi) must shrink toward 0 as xi -> 0+: on the sub-unit samples the
    # cubic moment has to be strictly increasing in xi.
    cubic = xs**3 * dp_vals
    low = xs <= 1.0
    dlow = np.diff(cubic[low])
    bad = np.where(dlow <= 0)[0]
    checks.append(("cubic_decay", bad.size == 0, float(xs[low][bad[0]]) if bad.size else None))

    # W_delta growth over the last decade of the sample.  The gauge divides
    # by max dp + 1, which only makes sense once dp is positive.
    trend = []
    if checks[0][1]:
        delta = min(xi_min, 0.5)
        top = xs[xs >= xi_max / 10.0]
        trend = [(float(x), w_delta(law, delta, float(x))) for x in top]
        wv = np.array([w for _, w in trend])
        dW = np.diff(wv)
        bad = np.where(dW <= 0)[0]
        checks.append(("w_growth", bad.size == 0, trend[bad[0]][0] if bad.size else None))
    else:
        checks.append(("w_growth", False, None))

    return AdmissibilityReport(sample_range=(xi_min, xi_max), checks=checks, w_trend=trend)


_BRACKET_CAP = 2.0**60


def a_star(law: PressureLaw, c: float, rtol: float = 1e-12) -> float:
    """Critical density: the unique root of xi^3 * dp(xi) = c^2.

    Brackets by doubling/halving from xi = 1 (the cubic moment is strictly
    increasing for admissible profiles), then solves with a safeguarded
    bisection-Newton hybrid to relative tolerance ``rtol``.
    """
    if c == 0:
        raise ConfigError("a_star requires c != 0")
    target = c * c

    def q(xi):
        return xi**3 * _eval_checked(law.dp, xi, "dp") - target

    lo = hi = 1.0
    qlo = qhi = q(1.0)
    while qhi < 0:
        hi *= 2.0
        if hi > _BRACKET_CAP:
            raise BracketError("no upper bracket for a_star: xi^3*dp(xi) stays below c^2")
        qhi = q(hi)
    while qlo > 0:
        lo *= 0.5
        if lo < 1.0 / _BRACKET_CAP:
            raise BracketError("no lower bracket for a_star: xi^3*dp(xi) stays above c^2")
        qlo = q(lo)
    if qlo == 0:
        return lo
    if qhi == 0:
        return hi

    xi = brentq(q, lo, hi, xtol=1e-300, rtol=8 * np.finfo(float).eps, maxiter=200)
    # Newton polish; the bracket endpoints safeguard the step.
    for _ in range(3):
        slope = 3 * xi**2 * law.dp(xi) + xi**3 * law.d2p(xi)
        if slope <= 0:
            break
        step = q(xi) / slope
        cand = xi - step
        if lo < cand < hi:
            xi = cand
    if abs(q(xi)) > rtol * target:
        raise BracketError(f"a_star root not resolved to rtol={rtol}")
    return xi


def g_c(law: PressureLaw, c: float, xi, order: int = 0):
    """Local wave function (c^2/2)(xi^-2 - 1) + p(xi) - p(1) or a derivative.

    order 0..3 select the function and its first three xi-derivatives.
    Accepts scalars or arrays in xi.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(xi <= 0):
        raise ConfigError("g_c requires xi > 0")
    c2 = c * c
    if order == 0:
        out = 0.5 * c2 * (xi**-2 - 1.0) + law.p(xi) - law.p(1.0)
    elif order == 1:
        out = -c2 * xi**-3 + law.dp(xi)
    elif order == 2:
        out = 3 * c2 * xi**-4 + law.d2p(xi)
    elif order == 3:
        out = -12 * c2 * xi**-5 + law.d3p(xi)
    else:
        raise ConfigError("g_c order must be 0, 1, 2 or 3")
    return out if out.ndim else float(out)


def w_delta(law: PressureLaw, delta: float, xi: float, n_scan: int = 64) -> float:
    """Growth gauge (xi^4 dp - 2 xi (p(xi)-p(1)) - 2 xi log xi) / (max dp + 1).

    The running maximum of dp over [delta, xi] is taken on a log-spaced
    scan of at least ``n_scan`` points.
    """
    if not (0 < delta < 1):
        raise ConfigError("w_delta requires delta in (0, 1)")
    if xi < delta:
        raise ConfigError("w_delta requires xi >= delta")
    n_scan = max(n_scan, 64)
    etas = np.geomspace(delta, max(xi, delta * (1 + 1e-15)), n_scan)
    dpmax = max(_eval_checked(law.dp, float(e), "dp") for e in etas)
    num = xi**4 * law.dp(xi) - 2 * xi * (law.p(xi) - law.p(1.0)) - 2 * xi * np.log(xi)
    return float(num / (dpmax + 1.0))
