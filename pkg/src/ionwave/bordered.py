"""Bordered Newton solver on the even half grid.

All wave solves in the package (amplitude-pinned local chart, arclength
continuation steps, crest-pinned limit wave) are instances of the same
square system: the residual at the representative nodes j = 0..M/2 plus
one scalar border equation, in the unknowns (f_half, c).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import NonConvergenceError
from .pressure import PressureLaw, g_c
from .elliptic import hb_invert
from .torus import EvenField, TorusGrid, even_extension_matrix, representative_indices
from .wave import make_state, WaveState

__all__ = ["BorderedResult", "bordered_newton"]

# border(c, f_full) -> (value, d/dc, gradient on the full grid)
Border = Callable[[float, np.ndarray], tuple[float, float, np.ndarray]]


@dataclass
class BorderedResult:
    state: WaveState
    iterations: int


def bordered_newton(
    law: PressureLaw,
    grid: TorusGrid,
    c: float,
    f_half: np.ndarray,
    border: Border,
    tol: float = 1e-10,
    max_iter: int = 30,
    elliptic_tol: float = 1e-13,
    delta_floor: float = 1e-4,
    phi_init: EvenField | None = None,
) -> BorderedResult:
    """Newton on {residual(c, f) = 0 on the half grid; border(c, f) = 0}."""
    from .torus import second_derivative_matrix

    E = even_extension_matrix(grid)
    reps = representative_indices(grid)
    n = reps.size
    D2 = second_derivative_matrix(grid)
    f_half = np.asarray(f_half, dtype=float).copy()
    phi_prev = phi_init

    for it in range(1, max_iter + 1):
        f_full = E @ f_half
        field = EvenField(grid, f_full)
        sol = hb_invert(field, tol=elliptic_tol, delta_floor=delta_floor, phi0=phi_prev)
        phi_prev = sol.phi
        res_full = g_c(law, c, f_full, 0) + sol.phi.values
        bval, db_dc, db_df = border(c, f_full)
        err = max(float(np.max(np.abs(res_full))), abs(bval))
        if err <= tol:
            state = make_state(law, c, field, elliptic_tol=elliptic_tol,
                               delta_floor=delta_floor, phi0=sol.phi)
            return BorderedResult(state=state, iterations=it - 1)

        Jphi = -D2 + np.diag(np.exp(sol.phi.values))
        KE = lu_solve(lu_factor(Jphi), E)  # (-D2 + e^phi)^-1 restricted to even inputs
        local = g_c(law, c, f_full, 1)
        J_red = (local[:, None] * E + KE)[reps]
        dcF = (c * (f_full**-2 - 1.0))[reps]

        A = np.zeros((n + 1, n + 1))
        A[:n, :n] = J_red
        A[:n, n] = dcF
        A[n, :n] = E.T @ db_df
        A[n, n] = db_dc
        rhs = -np.r_[res_full[reps], bval]
        try:
            delta = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError as exc:
            raise NonConvergenceError(f"bordered system singular at iteration {it}") from exc
        f_half += delta[:n]
        c += delta[n]

    raise NonConvergenceError(
        f"bordered Newton did not converge in {max_iter} iterations",
        last_residual=err,
        iterations=max_iter,
    )
