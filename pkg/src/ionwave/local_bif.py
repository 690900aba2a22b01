"""Local bifurcation data at the trivial state: kernel mode, the second
derivative of the speed curve by two independent routes, and the
exceptional-period set.

The closed-form route assembles the curvature of the bifurcating speed
curve from the trilinear and bilinear residual derivatives, applying the
true inverse of the linearization on the kernel complement (division by
the mode eigenvalues mu_0, mu_2).  The degree-8 polynomial route uses the
printed coefficient table; note that table encodes the eigenvalue-
*multiplied* combination, so its zero set is not the zero set of the
operator route (see ``POLY_CONVENTION``).  The numerical arbiter is a
spectral Frechet oracle based on Cauchy-integral directional derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import ConfigError, NonConvergenceError
from .pressure import PressureLaw
from .torus import EvenField, TorusGrid, cosine_coefficient, field_from_function
from .wave import WaveState, discrete_dispersion_speed, dispersion_speed, make_state
from .bordered import bordered_newton

__all__ = [
    "LocalBifData",
    "POLY_CONVENTION",
    "local_bifurcation_data",
    "psi2_operator",
    "psi2_polynomial",
    "polynomial_coefficients",
    "exceptional_periods",
    "psi2_fd_oracle",
    "small_amplitude_wave",
]

# The printed coefficient table reproduces the combination in which the
# kernel-complement inverse is replaced by multiplication with the mode
# eigenvalues; the operator route divides (true inverse).  The Frechet
# oracle agrees with the divided route.
POLY_CONVENTION = "eigenvalue-multiplied"


@dataclass(frozen=True)
class LocalBifData:
    c0: float
    c0_discrete: float | None
    alpha: float
    A_coef: float
    B_coef: float
    psi2_operator: float
    psi2_poly: float
    a_coeffs: np.ndarray  # a_0..a_8, ascending powers of alpha^2
    poly_convention: str = POLY_CONVENTION
    xi0: EvenField | None = None


def _pieces(law: PressureLaw, L: float):
    alpha = 2 * np.pi / L
    z = alpha * alpha
    p1, p2, p3 = float(law.dp(1.0)), float(law.d2p(1.0)), float(law.d3p(1.0))
    c02 = p1 + 1.0 / (1.0 + z)
    A = 0.5 * (3 * c02 + p2) - 1.0 / (2 * (1 + z) ** 2)
    B = 0.5 * (3 * c02 + p2) - 1.0 / (2 * (1 + z) ** 2 * (1 + 4 * z))
    mu0 = 1.0 - 1.0 / (1 + z)
    mu2 = 1.0 / (1 + 4 * z) - 1.0 / (1 + z)
    D3 = (
        0.75 * (-12 * c02 + p3)
        + 3.0 / (4 * (1 + z) ** 4)
        + 3.0 / (4 * (1 + z) ** 4 * (1 + 4 * z))
    )
    return alpha, z, p1, p2, p3, c02, A, B, mu0, mu2, D3


def psi2_operator(law: PressureLaw, L: float) -> float:
    """Speed-curve curvature from the exact derivative assembly.

    The kernel-complement inverse acts diagonally on cosine modes, so the
    quadratic feedback divides by the mode eigenvalues.
    """
    alpha, z, p1, p2, p3, c02, A, B, mu0, mu2, D3 = _pieces(law, L)
    if abs(mu0) < 1e-14 or abs(mu2) < 1e-14:
        raise ConfigError("degenerate period: a complement mode eigenvalue vanishes")
    At, Bt = A / mu0, B / mu2
    c0 = np.sqrt(c02)
    return float((-D3 / 3.0 + (2 * A * At + B * Bt)) / (-2 * c0))


def polynomial_coefficients(law: PressureLaw) -> np.ndarray:
    """Coefficients a_0..a_8 of the degree-8 polynomial in alpha^2."""
    p1, p2, p3 = float(law.dp(1.0)), float(law.d2p(1.0)), float(law.d3p(1.0))
    return np.array(
        [
            12 * p1 - p3 + 10,
            -9 * p1**2 - 6 * p1 * p2 - p2**2 + 192 * p1 - 4 * p2 - 17 * p3 + 166,
            -36 * p1**2 - 24 * p1 * p2 - 4 * p2**2 + 1302 * p1 - 38 * p2 - 118 * p3 + 1080,
            378 * p1**2 + 252 * p1 * p2 + 42 * p2**2 + 5304 * p1 + 32 * p2 - 434 * p3 + 3727,
            2844 * p1**2 + 1896 * p1 * p2 + 316 * p2**2 + 13986 * p1 + 962 * p2 - 925 * p3 + 7852,
            7191 * p1**2 + 4794 * p1 * p2 + 799 * p2**2 + 21564 * p1 + 2464 * p2 - 1181 * p3 + 9024,
            8640 * p1**2 + 5760 * p1 * p2 + 960 * p2**2 + 17712 * p1 + 2336 * p2 - 892 * p3 + 4800,
            5040 * p1**2 + 3360 * p1 * p2 + 560 * p2**2 + 6720 * p1 + 768 * p2 - 368 * p3 + 768,
            1152 * p1**2 + 768 * p1 * p2 + 128 * p2**2 + 768 * p1 - 64 * p3,
        ]
    )


def psi2_polynomial(law: PressureLaw, L: float) -> tuple[float, np.ndarray]:
    """Value and coefficients of the printed degree-8 polynomial at alpha^2."""
    a = polynomial_coefficients(law)
    z = (2 * np.pi / L) ** 2
    return float(np.polynomial.polynomial.polyval(z, a)), a


def _multiplied_combination(law: PressureLaw, L: float) -> float:
    """Zero-condition combination with eigenvalue-multiplied feedback; the
    printed polynomial equals this times 4(1+z)^5(1+4z)^3."""
    alpha, z, p1, p2, p3, c02, A, B, mu0, mu2, D3 = _pieces(law, L)
    return float(2 * A * (A * mu0) + B * (B * mu2) - D3 / 3.0)


def exceptional_periods(
    law: PressureLaw, z_max: float = 1e6, n_scan: int = 4000, coeffs=None
) -> list[float]:
    """Positive roots in z = (2*pi/L)^2 of the degree-8 polynomial, as periods L.

    Sign-change scan on a log grid in (0, z_max], bisected to 1e-10 relative.
    At most 8 periods can come out; an empty list is a valid result.
    """
    a = polynomial_coefficients(law) if coeffs is None else np.asarray(coeffs, dtype=float)

    def P(z):
        return np.polynomial.polynomial.polyval(z, a)

    zs = np.geomspace(1e-8, z_max, n_scan)
    vals = P(zs)
    roots = []
    for i in range(len(zs) - 1):
        v0, v1 = vals[i], vals[i + 1]
        if v0 == 0.0:
            roots.append(zs[i])
            continue
        if v0 * v1 < 0:
            lo, hi = zs[i], zs[i + 1]
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if P(lo) * P(mid) <= 0:
                    hi = mid
                else:
                    lo = mid
                if hi - lo <= 1e-10 * mid:
                    break
            roots.append(0.5 * (lo + hi))
    if vals[-1] == 0.0:
        roots.append(zs[-1])
    Ls = sorted(2 * np.pi / np.sqrt(z) for z in roots)
    return Ls[:8]


# ----------------------------------------------------------------------
# Spectral Frechet oracle


class _SpectralResidual:
    """Residual with spectrally exact periodic differentiation, used only
    by the oracle so its discretization error is negligible."""

    def __init__(self, law: PressureLaw, L: float, M: int = 128):
        self.law = law
        self.L = L
        self.M = M
        self.x = -L / 2 + (L / M) * np.arange(M)
        k = np.fft.rfftfreq(M, d=L / M) * 2 * np.pi  # angular wavenumbers
        sym = -(k**2)
        eye = np.eye(M)
        self.D2 = np.real(np.fft.irfft(sym[:, None] * np.fft.rfft(eye, axis=0), n=M, axis=0))

    def potential(self, f: np.ndarray, tol: float = 5e-12) -> np.ndarray:
        """Solve -phi'' + e^phi = f by Newton; complex sources allowed."""
        phi = np.full(self.M, np.log(np.mean(f)), dtype=f.dtype)
        prev = np.inf
        for _ in range(60):
            res = f - (-self.D2 @ phi + np.exp(phi))
            rnorm = np.max(np.abs(res))
            if rnorm <= tol or rnorm >= 0.5 * prev:  # converged or at the noise floor
                if rnorm <= 1e-9:
                    return phi
            prev = rnorm
            A = -self.D2 + np.diag(np.exp(phi))
            phi = phi + lu_solve(lu_factor(A), res)
        raise NonConvergenceError("spectral elliptic solve stalled")

    def residual(self, c: float, f: np.ndarray) -> np.ndarray:
        law = self.law
        return 0.5 * c * c * (f**-2 - 1.0) + law.p(f) - law.p(1.0) + self.potential(f)


def _cauchy_directional_derivs(gfun, orders, radius=0.25, n_points=32):
    """Derivatives of t -> gfun(t) at t = 0 by the Cauchy integral over a
    circle of radius ``radius``; gfun must be analytic there."""
    thetas = 2 * np.pi * np.arange(n_points) / n_points
    ts = radius * np.exp(1j * thetas)
    G = np.array([gfun(t) for t in ts])  # (n_points, M)
    out = {}
    for n in orders:
        an = np.mean(G * np.exp(-1j * n * thetas)[:, None], axis=0) / radius**n
        out[n] = np.real(an) * math.factorial(n)
    return out


def _mode_coeff(vals: np.ndarray, x: np.ndarray, L: float, k: int) -> float:
    h = L / vals.size
    if k == 0:
        return float(np.sum(vals) * h / L)
    return float(2.0 * np.sum(vals * np.cos(2 * np.pi * k * x / L)) * h / L)


def psi2_fd_oracle(law: PressureLaw, L: float, M: int = 128, kmax: int = 16) -> float:
    """Fully numerical speed-curve curvature from directional derivatives of
    the spectral residual; independent of the closed-form assembly."""
    sp = _SpectralResidual(law, L, M)
    alpha = 2 * np.pi / L
    c0 = dispersion_speed(law, L, 1)
    xi0 = np.cos(alpha * sp.x)

    d = _cauchy_directional_derivs(lambda t: sp.residual(c0, 1.0 + t * xi0), (2, 3))
    q2, q3 = d[2], d[3]

    # Apply the kernel-complement inverse mode by mode (divide by the
    # eigenvalues of the linearization, zero out the kernel mode).
    p1 = float(law.dp(1.0))
    w = np.zeros(M)
    for k in range(kmax + 1):
        if k == 1:
            continue
        mu_k = p1 - c0 * c0 + 1.0 / (1.0 + (k * alpha) ** 2)
        ck = _mode_coeff(q2, sp.x, L, k)
        w += (ck / mu_k) * np.cos(k * alpha * sp.x)

    # Bilinear term by polarization of two directional second derivatives.
    scale = max(np.max(np.abs(w)), 1e-30)
    wh = w / scale
    dp_ = _cauchy_directional_derivs(lambda t: sp.residual(c0, 1.0 + t * (xi0 + wh)), (2,), radius=0.15)
    dm_ = _cauchy_directional_derivs(lambda t: sp.residual(c0, 1.0 + t * (xi0 - wh)), (2,), radius=0.15)
    mixed = scale * 0.25 * (dp_[2] - dm_[2])

    num = -_mode_coeff(q3, sp.x, L, 1) / 3.0 + _mode_coeff(mixed, sp.x, L, 1)
    return float(num / (-2 * c0))


def local_bifurcation_data(
    law: PressureLaw, L: float, grid: TorusGrid | None = None
) -> LocalBifData:
    alpha, z, p1, p2, p3, c02, A, B, mu0, mu2, D3 = _pieces(law, L)
    val, a = psi2_polynomial(law, L)
    xi0 = None
    c0d = None
    if grid is not None:
        xi0 = field_from_function(grid, lambda x: np.cos(alpha * x))
        c0d = discrete_dispersion_speed(law, grid, 1)
    return LocalBifData(
        c0=float(np.sqrt(c02)),
        c0_discrete=c0d,
        alpha=alpha,
        A_coef=A,
        B_coef=B,
        psi2_operator=psi2_operator(law, L),
        psi2_poly=val,
        a_coeffs=a,
        xi0=xi0,
    )


DEFAULT_S_MAX = 0.2


def small_amplitude_wave(
    law: PressureLaw,
    L: float,
    s: float,
    tol: float = 1e-10,
    M: int = 256,
    s_max: float = DEFAULT_S_MAX,
    elliptic_tol: float = 1e-13,
    delta_floor: float = 1e-4,
) -> WaveState:
    """Newton-corrected wave of prescribed first cosine amplitude s.

    Predictor 1 + s*cos(2*pi*x/L) at the discrete bifurcation speed;
    corrector pins the mode-1 amplitude through a bordered system.
    """
    if not (0 <= s <= s_max):
        raise ConfigError(
            f"amplitude s={s} outside the local chart [0, {s_max}]; "
            "use branch continuation for larger waves"
        )
    for Lx in exceptional_periods(law):
        if abs(Lx - L) < 1e-6:
            raise ConfigError(f"period L={L} is within 1e-6 of the exceptional period {Lx}")

    grid = TorusGrid(L, M)
    c0d = discrete_dispersion_speed(law, grid, 1)
    if s == 0.0:
        return make_state(law, c0d, field_from_function(grid, lambda x: np.ones_like(x)),
                          elliptic_tol=elliptic_tol, delta_floor=delta_floor)

    alpha = 2 * np.pi / L
    reps = np.arange(grid.M // 2 + 1)
    x_half = grid.nodes[reps]
    f_half = 1.0 + s * np.cos(alpha * x_half)
    cosx = np.cos(alpha * grid.nodes)
    wgrad = (2.0 / L) * cosx * grid.h

    def border(c, f_full):
        amp = float(2.0 * np.sum((f_full - 1.0) * cosx) * grid.h / L)
        return amp - s, 0.0, wgrad

    result = bordered_newton(
        law, grid, c0d, f_half, border,
        tol=tol, elliptic_tol=elliptic_tol, delta_floor=delta_floor,
    )
    return result.state
