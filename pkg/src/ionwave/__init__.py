"""Periodic traveling waves of the 1D cold-ion Euler-Poisson system with
Boltzmann electrons: pressure profiles, the nonlinear elliptic solver,
local bifurcation data, and global branch continuation up to the corner
wave."""

from .pressure import (
    PressureLaw,
    AdmissibilityReport,
    power_law,
    log_law,
    inverse_law,
    custom_law,
    validate_admissibility,
    a_star,
    g_c,
    w_delta,
)
from .torus import TorusGrid, EvenField, second_derivative, cosine_coefficient, enforce_evenness
from .elliptic import hb_apply, hb_invert, green_kernel, helmholtz_inverse
from .wave import (
    WaveState,
    make_state,
    residual,
    jacobian_apply,
    dispersion_speed,
    discrete_dispersion_speed,
    validate_wave_properties,
)
from .local_bif import (
    LocalBifData,
    local_bifurcation_data,
    psi2_operator,
    psi2_polynomial,
    exceptional_periods,
    psi2_fd_oracle,
    small_amplitude_wave,
)
from .continuation import (
    ContinuationConfig,
    Branch,
    BranchPoint,
    trace_branch,
    theoretical_theta,
    solve_limit_wave,
    holder_diagnostics,
)

__version__ = "0.1.0"
