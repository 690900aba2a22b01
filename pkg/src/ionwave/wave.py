"""Traveling-wave residual, its derivative actions and property monitors.

The residual couples the local wave function with the inverse of the
nonlinear elliptic operator:  F(c, f) = (c^2/2)(f^-2 - 1) + p(f) - p(1)
+ phi, where -phi'' + e^phi = f.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import ConfigError, ContractError
from .pressure import PressureLaw, a_star, g_c
from .elliptic import hb_invert
from .torus import (
    EvenField,
    TorusGrid,
    enforce_evenness,
    second_derivative,
    second_derivative_matrix,
)

__all__ = [
    "WaveState",
    "WavePropertyReport",
    "make_state",
    "residual",
    "jacobian_apply",
    "jacobian_matrix",
    "residual_c_derivative",
    "dispersion_speed",
    "discrete_dispersion_speed",
    "validate_wave_properties",
]


@dataclass(frozen=True)
class WaveState:
    """One point (c, f) on the bifurcation curve with cached potential."""

    c: float
    f: EvenField
    phi: EvenField
    a_star_c: float
    min_f: float
    max_f: float
    gap: float
    residual_sup: float

    @property
    def grid(self) -> TorusGrid:
        return self.f.grid

    @property
    def amplitude(self) -> float:
        from .torus import cosine_coefficient

        return cosine_coefficient(self.f.with_values(self.f.values - 1.0), 1)

    @property
    def crest_slope(self) -> float:
        """One-sided slope at the crest, (f(0) - f(-h))/h."""
        v = self.f.values
        j = self.grid.M // 2
        return float((v[j] - v[j - 1]) / self.grid.h)


def make_state(
    law: PressureLaw,
    c: float,
    f: EvenField,
    elliptic_tol: float = 1e-12,
    delta_floor: float = 1e-4,
    phi0: EvenField | None = None,
) -> WaveState:
    """Assemble a WaveState, solving the elliptic problem for the potential."""
    sol = hb_invert(f, tol=elliptic_tol, delta_floor=delta_floor, phi0=phi0)
    res = g_c(law, c, f.values, 0) + sol.phi.values
    ast = a_star(law, c)
    return WaveState(
        c=c,
        f=f,
        phi=sol.phi,
        a_star_c=ast,
        min_f=float(np.min(f.values)),
        max_f=float(np.max(f.values)),
        gap=float(ast - np.max(f.values)),
        residual_sup=float(np.max(np.abs(res))),
    )


def residual(law: PressureLaw, state: WaveState) -> EvenField:
    """Nodewise residual G_c(f) + phi."""
    vals = g_c(law, state.c, state.f.values, 0) + state.phi.values
    return enforce_evenness(state.f.with_values(vals))


def jacobian_apply(law: PressureLaw, state: WaveState, h: EvenField) -> EvenField:
    """Action of the f-derivative of the residual on a field h.

    (p'(f) - c^2 f^-3) h + w  with  (-D2 + diag(e^phi)) w = h.
    """
    grid = state.grid
    A = -second_derivative_matrix(grid) + np.diag(np.exp(state.phi.values))
    w = np.linalg.solve(A, h.values)
    local = g_c(law, state.c, state.f.values, 1)
    return h.with_values(local * h.values + w)


def jacobian_matrix(law: PressureLaw, state: WaveState) -> np.ndarray:
    """Dense f-derivative of the residual: diag(G_c'(f)) + (-D2+diag(e^phi))^-1."""
    grid = state.grid
    A = -second_derivative_matrix(grid) + np.diag(np.exp(state.phi.values))
    K = lu_solve(lu_factor(A), np.eye(grid.M))
    return np.diag(g_c(law, state.c, state.f.values, 1)) + K


def residual_c_derivative(state: WaveState) -> EvenField:
    """Partial derivative of the residual in the speed: c*(f^-2 - 1)."""
    return state.f.with_values(state.c * (state.f.values**-2 - 1.0))


def dispersion_speed(law: PressureLaw, L: float, m: int = 1) -> float:
    """Bifurcation speed sqrt(p'(1) + 1/(1 + (2*pi*m/L)^2)) for mode m."""
    if m < 1:
        raise ConfigError("mode index m must be >= 1")
    p1 = float(law.dp(1.0))
    if p1 <= 0:
        raise ConfigError("dispersion_speed requires dp(1) > 0")
    return float(np.sqrt(p1 + 1.0 / (1.0 + (2 * np.pi * m / L) ** 2)))


def discrete_dispersion_speed(law: PressureLaw, grid: TorusGrid, m: int = 1) -> float:
    """Speed using the discrete stencil symbol, making the FD Jacobian
    exactly singular on the kernel mode."""
    p1 = float(law.dp(1.0))
    lam = grid.mode_eigenvalue(m)
    return float(np.sqrt(p1 + 1.0 / (1.0 + lam)))


@dataclass(frozen=True)
class WavePropertyReport:
    oscillation: bool
    monotone: bool
    monotone_witness: int | None
    curvature: bool | None  # None when suspended near the corner
    lipschitz_ok: bool
    lipschitz_seminorm: float
    amplitude_gap_ok: bool
    amplitude_gap: float

    @property
    def passed(self) -> bool:
        req = [self.oscillation, self.monotone, self.lipschitz_ok, self.amplitude_gap_ok]
        if self.curvature is not None:
            req.append(self.curvature)
        return all(req)


def validate_wave_properties(
    law: PressureLaw,
    state: WaveState,
    tol: float = 1e-8,
    curvature_margin: float | None = None,
    lipschitz_cap: float = 10.0,
    amplitude_floor: float = 1e-2,
) -> WavePropertyReport:
    """Qualitative monitors for a converged non-trivial wave.

    (a) oscillation around the equilibrium, (b) strict monotonicity on the
    half period, (c) crest/trough curvature signs while the wave is smooth,
    (d) a Lipschitz-seminorm cap, (e) the trough amplitude gap.
    """
    if state.residual_sup > tol:
        raise ContractError(f"state residual {state.residual_sup:.3e} exceeds tol {tol:.3e}")
    v = state.f.values
    if np.max(np.abs(v - 1.0)) <= 10 * tol:
        raise ContractError("state is the trivial wave; property monitors need a non-trivial one")

    M, h = state.grid.M, state.grid.h
    oscillation = bool(state.min_f < 1.0 < state.max_f)

    half = v[: M // 2 + 1]
    fwd = np.diff(half)
    interior = fwd[1:-1]
    bad = np.concatenate([np.where(fwd < -tol)[0], 1 + np.where(interior <= 0)[0]])
    monotone = bad.size == 0
    witness = int(np.min(bad)) if bad.size else None

    if curvature_margin is None:
        curvature_margin = 0.05 * state.a_star_c
    curvature = None
    if state.gap > curvature_margin:
        d2 = second_derivative(state.f).values
        curvature = bool(d2[M // 2] < 0 and d2[0] > 0)

    lip = float(np.max(np.abs(np.diff(np.r_[v, v[0]]))) / h)
    lipschitz_ok = bool(lip <= lipschitz_cap)

    agap = float(state.a_star_c - v[0])
    amplitude_gap_ok = bool(agap >= amplitude_floor)

    return WavePropertyReport(
        oscillation=oscillation,
        monotone=monotone,
        monotone_witness=witness,
        curvature=curvature,
        lipschitz_ok=lipschitz_ok,
        lipschitz_seminorm=lip,
        amplitude_gap_ok=amplitude_gap_ok,
        amplitude_gap=agap,
    )
