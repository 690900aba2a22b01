import numpy as np
import pytest

from ionwave.errors import ConfigError
from ionwave.local_bif import (
    POLY_CONVENTION,
    _multiplied_combination,
    exceptional_periods,
    local_bifurcation_data,
    polynomial_coefficients,
    psi2_fd_oracle,
    psi2_operator,
    psi2_polynomial,
    small_amplitude_wave,
)
from ionwave.pressure import custom_law, power_law
from ionwave.torus import TorusGrid
from ionwave.wave import discrete_dispersion_speed, dispersion_speed

L = 2 * np.pi
LAW = power_law(2.0, 0.5)  # p(rho) = rho


def quad_law(kappa):
    # p = kappa*rho^2: p1 = p2 = 2*kappa, p3 = 0.  Callables keep the
    # input dtype so the complex-step oracle can use them.
    return custom_law(
        lambda x: kappa * x * x,
        lambda x: 2 * kappa * x,
        lambda x: 2 * kappa + 0 * x,
        lambda x: 0 * x,
        label=f"quad({kappa})",
    )


class TestClosedForm:
    def test_finite_at_reference(self):
        val = psi2_operator(quad_law(1.0), L)
        assert np.isfinite(val)

    def test_zero_condition_combination(self):
        # Psi''(0) * (-2 c0) must equal the independently assembled
        # combination 2*A*At + B*Bt + (3c0^2 - p3/4)
        # - 1/(4(1+z)^4) - 1/(4(1+z)^4(1+4z)).
        for law, Lx in ((quad_law(1.0), L), (LAW, 3.0), (quad_law(0.3), 9.0)):
            z = (2 * np.pi / Lx) ** 2
            p1, p2, p3 = float(law.dp(1)), float(law.d2p(1)), float(law.d3p(1))
            c02 = p1 + 1 / (1 + z)
            A = 0.5 * (3 * c02 + p2) - 1 / (2 * (1 + z) ** 2)
            B = 0.5 * (3 * c02 + p2) - 1 / (2 * (1 + z) ** 2 * (1 + 4 * z))
            At = A / (1 - 1 / (1 + z))
            Bt = B / (1 / (1 + 4 * z) - 1 / (1 + z))
            combo = (2 * A * At + B * Bt + (3 * c02 - 0.25 * p3)
                     - 1 / (4 * (1 + z) ** 4) - 1 / (4 * (1 + z) ** 4 * (1 + 4 * z)))
            lhs = psi2_operator(law, Lx) * (-2 * np.sqrt(c02))
            assert lhs == pytest.approx(combo, abs=1e-10 * max(1.0, abs(combo)))

    def test_psi_prime_zero(self):
        # The quadratic term of the residual along the kernel mode has no
        # mode-1 content, so Psi'(0) = 0.
        from ionwave.local_bif import _SpectralResidual, _cauchy_directional_derivs, _mode_coeff

        sp = _SpectralResidual(LAW, L, 128)
        c0 = dispersion_speed(LAW, L, 1)
        xi0 = np.cos(sp.x)
        d = _cauchy_directional_derivs(lambda t: sp.residual(c0, 1.0 + t * xi0), (2,))
        scale = max(np.max(np.abs(d[2])), 1.0)
        assert abs(_mode_coeff(d[2], sp.x, L, 1)) < 1e-12 * scale

    def test_oracle_cross_validation(self):
        for law, Lx in ((quad_law(1.0), L), (quad_law(2.5), 4.0), (LAW, 7.0)):
            a = psi2_operator(law, Lx)
            b = psi2_fd_oracle(law, Lx)
            assert b == pytest.approx(a, rel=1e-6)

    def test_reference_value(self):
        # p = rho, L = 2*pi: the curvature of the speed curve is negative
        # (the branch bends toward smaller speeds).
        val = psi2_operator(LAW, L)
        assert val == pytest.approx(-2.4665, rel=1e-3)


class TestPolynomial:
    def test_printed_kappa_formulas(self):
        for kappa in (0.25, 1.0, 3.0, 6.0):
            a = polynomial_coefficients(quad_law(kappa))
            assert a[1] == pytest.approx(-64 * kappa**2 + 376 * kappa + 166, rel=1e-13)
            assert a[2] == pytest.approx(-256 * kappa**2 + 2528 * kappa + 1080, rel=1e-13)

    def test_linear_law_a0(self):
        a = polynomial_coefficients(LAW)
        assert a[0] == 22.0

    def test_small_kappa_all_positive(self):
        for kappa in (0.1, 0.5, 1.0, 2.0, 4.0, 6.0):
            assert np.all(polynomial_coefficients(quad_law(kappa)) > 0)
            assert exceptional_periods(quad_law(kappa)) == []

    def test_value_matches_horner(self):
        law = quad_law(1.7)
        val, a = psi2_polynomial(law, 5.0)
        z = (2 * np.pi / 5.0) ** 2
        assert val == pytest.approx(sum(ai * z**i for i, ai in enumerate(a)), rel=1e-13)

    def test_poly_is_multiplied_combination_times_positive_factor(self):
        # The printed table equals the eigenvalue-multiplied combination
        # scaled by 4(1+z)^5 (1+4z)^3; this pins down which convention the
        # table encodes (see POLY_CONVENTION).
        rng = np.random.default_rng(33)
        for _ in range(50):
            kappa = rng.uniform(0.1, 6.0)
            Lx = rng.uniform(1.0, 30.0)
            law = quad_law(kappa)
            z = (2 * np.pi / Lx) ** 2
            val, _ = psi2_polynomial(law, Lx)
            combo = _multiplied_combination(law, Lx)
            factor = 4 * (1 + z) ** 5 * (1 + 4 * z) ** 3
            assert val == pytest.approx(combo * factor, rel=1e-9)

    def test_zero_set_agreement_with_multiplied_combination(self):
        # Sign agreement between the polynomial and the multiplied
        # combination over the sweep; at non-zeros the signs coincide.
        rng = np.random.default_rng(34)
        for _ in range(50):
            kappa = rng.uniform(0.1, 6.0)
            Lx = rng.uniform(1.0, 30.0)
            law = quad_law(kappa)
            val, _ = psi2_polynomial(law, Lx)
            combo = _multiplied_combination(law, Lx)
            if abs(val) > 1e-9 and abs(combo) > 1e-9:
                assert np.sign(val) == np.sign(combo)


class TestExceptionalPeriods:
    def test_synthetic_root_recovered(self):
        z_star = 2.5
        # (z - z_star)(z + 1): one positive root.
        coeffs = [-z_star, 1.0 - z_star, 1.0, 0, 0, 0, 0, 0, 0]
        out = exceptional_periods(LAW, coeffs=coeffs)
        assert len(out) == 1
        assert out[0] == pytest.approx(2 * np.pi / np.sqrt(z_star), rel=1e-8)

    def test_at_most_eight(self):
        rng = np.random.default_rng(40)
        for _ in range(10):
            coeffs = rng.standard_normal(9)
            assert len(exceptional_periods(LAW, coeffs=coeffs)) <= 8

    def test_reference_family_empty(self):
        assert exceptional_periods(quad_law(1.0)) == []


class TestSmallAmplitudeWave:
    def test_zero_amplitude_is_trivial(self):
        state = small_amplitude_wave(LAW, L, 0.0, M=128)
        grid = TorusGrid(L, 128)
        assert state.c == pytest.approx(discrete_dispersion_speed(LAW, grid, 1), rel=1e-14)
        assert np.max(np.abs(state.f.values - 1.0)) == 0.0

    def test_amplitude_is_pinned(self):
        for s in (0.01, 0.05):
            state = small_amplitude_wave(LAW, L, s, M=128)
            assert state.amplitude == pytest.approx(s, abs=1e-10)
            assert state.residual_sup < 1e-8

    def test_richardson_quadratic_remainder(self):
        grid = TorusGrid(L, 256)
        c0d = discrete_dispersion_speed(LAW, grid, 1)
        xi0 = np.cos(grid.nodes)
        ratios = []
        for s in (0.01, 0.02, 0.04):
            state = small_amplitude_wave(LAW, L, s, M=256)
            dev = np.max(np.abs(state.f.values - 1.0 - s * xi0))
            ratios.append(dev / s**2)
        assert max(ratios) / min(ratios) < 1.25

    def test_speed_shift_matches_psi2(self):
        grid = TorusGrid(L, 256)
        c0d = discrete_dispersion_speed(LAW, grid, 1)
        psi2 = psi2_operator(LAW, L)
        s = 0.02
        state = small_amplitude_wave(LAW, L, s, M=256)
        shift = (state.c - c0d) / s**2
        assert abs(shift) == pytest.approx(0.5 * abs(psi2), rel=0.2)
        assert np.sign(shift) == np.sign(psi2)

    def test_amplitude_beyond_chart_rejected(self):
        with pytest.raises(ConfigError):
            small_amplitude_wave(LAW, L, 0.5)


def test_local_bifurcation_data_bundle():
    grid = TorusGrid(L, 128)
    data = local_bifurcation_data(LAW, L, grid)
    assert data.c0 == pytest.approx(np.sqrt(1.5), rel=1e-12)
    assert data.c0_discrete == pytest.approx(discrete_dispersion_speed(LAW, grid, 1), rel=1e-14)
    assert data.alpha == pytest.approx(1.0, rel=1e-14)
    assert data.poly_convention == POLY_CONVENTION == "eigenvalue-multiplied"
    assert len(data.a_coeffs) == 9
    assert data.xi0 is not None
