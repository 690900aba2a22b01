"""Pseudo-arclength continuation of the wave branch and the singular
corner wave at its end.

The tracer starts from a small-amplitude Newton-corrected wave, advances
with a secant tangent and a bordered corrector, monitors the qualitative
wave properties at every accepted point, and stops when the crest comes
within ``tol_touch`` of the critical density a*(c).  The corner wave is
then computed directly from an amplitude-pinned bordered system, and its
one-sided crest slope is compared with the closed-form corner slope.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ConfigError, ContractError, NonConvergenceError
from .pressure import PressureLaw, a_star, g_c
from .torus import EvenField, TorusGrid, even_extension_matrix, representative_indices
from .wave import (
    WavePropertyReport,
    WaveState,
    discrete_dispersion_speed,
    validate_wave_properties,
)
from .bordered import bordered_newton
from .local_bif import small_amplitude_wave

__all__ = [
    "ContinuationConfig",
    "BranchPoint",
    "Branch",
    "trace_branch",
    "resume_branch",
    "theoretical_theta",
    "solve_limit_wave",
    "holder_diagnostics",
    "branch_to_csv",
    "write_checkpoint",
    "read_checkpoint",
]


@dataclass(frozen=True)
class ContinuationConfig:
    M: int = 1024
    tol_newton: float = 1e-10
    ds_init: float = 0.02
    ds_min: float = 1e-6
    ds_max: float = 0.2
    tol_touch: float | None = None  # default 1e-3 * a*(c0)
    max_steps: int = 500
    delta_floor: float = 1e-4
    c_cap: float | None = None  # default 10 * c0
    amplitude_floor: float = 1e-2
    curvature_margin: float | None = None  # default 0.05 * a*(c0)
    lipschitz_cap: float = 10.0
    elliptic_tol: float = 1e-13
    s_start: float = 0.05

    def __post_init__(self):
        if not (0 < self.ds_min <= self.ds_init <= self.ds_max):
            raise ConfigError("require 0 < ds_min <= ds_init <= ds_max")
        for name in ("tol_newton", "delta_floor", "amplitude_floor", "lipschitz_cap",
                     "elliptic_tol", "s_start"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be at least 1")

    def resolved(self, law: PressureLaw, L: float) -> "ContinuationConfig":
        """Fill the thresholds that default relative to the bifurcation point."""
        grid = TorusGrid(L, self.M)
        c0 = discrete_dispersion_speed(law, grid, 1)
        ast0 = a_star(law, c0)
        kw = asdict(self)
        if kw["tol_touch"] is None:
            kw["tol_touch"] = 1e-3 * ast0
        if kw["c_cap"] is None:
            kw["c_cap"] = 10.0 * c0
        if kw["curvature_margin"] is None:
            kw["curvature_margin"] = 0.05 * ast0
        return ContinuationConfig(**kw)


@dataclass(frozen=True)
class BranchPoint:
    s_arc: float
    state: WaveState
    amplitude: float
    gap: float
    crest_slope: float
    newton_iters: int
    monitors: WavePropertyReport
    violations: tuple[str, ...] = ()


@dataclass(frozen=True)
class Branch:
    points: list[BranchPoint]
    stop_reason: str  # touched | max_steps | step_underflow | monitor_violation
    theta_extrapolated: float | None = None
    # Loop state at the stop, for checkpointing: prev, cur, s_arc, ds.
    loop_state: dict | None = None


def _product_norm(dc: float, df: np.ndarray, h: float) -> float:
    return float(np.sqrt(dc * dc + np.sum(df * df) * h))


def _make_point(law, cfg: ContinuationConfig, state: WaveState, s_arc: float,
                iters: int, prev_amplitude: float | None) -> BranchPoint:
    monitors = validate_wave_properties(
        law, state,
        tol=100 * cfg.tol_newton,
        curvature_margin=cfg.curvature_margin,
        lipschitz_cap=cfg.lipschitz_cap,
        amplitude_floor=cfg.amplitude_floor,
    )
    amp = state.amplitude
    violations = []
    if not monitors.passed:
        violations.append("wave_properties")
    if prev_amplitude is not None and amp <= prev_amplitude:
        violations.append("amplitude_not_increasing")
    if abs(state.c) > cfg.c_cap:
        violations.append("speed_cap")
    if state.min_f < cfg.delta_floor:
        violations.append("density_floor")
    return BranchPoint(
        s_arc=s_arc,
        state=state,
        amplitude=amp,
        gap=state.gap,
        crest_slope=state.crest_slope,
        newton_iters=iters,
        monitors=monitors,
        violations=tuple(violations),
    )


def trace_branch(law: PressureLaw, L: float, cfg: ContinuationConfig) -> Branch:
    """Trace the branch from the local chart until the crest touches a*(c)."""
    cfg = cfg.resolved(law, L)
    from .local_bif import exceptional_periods

    for Lx in exceptional_periods(law):
        if abs(Lx - L) < 1e-6:
            raise ConfigError(f"period L={L} is within 1e-6 of the exceptional period {Lx}")

    prev = small_amplitude_wave(law, L, 0.9 * cfg.s_start, tol=cfg.tol_newton, M=cfg.M,
                                elliptic_tol=cfg.elliptic_tol, delta_floor=cfg.delta_floor)
    cur = small_amplitude_wave(law, L, cfg.s_start, tol=cfg.tol_newton, M=cfg.M,
                               elliptic_tol=cfg.elliptic_tol, delta_floor=cfg.delta_floor)
    seed = _make_point(law, cfg, cur, 0.0, 0, None)
    return _continue_loop(law, cfg, prev, cur, s_arc=0.0, ds=cfg.ds_init, points=[seed])


def _continue_loop(law: PressureLaw, cfg: ContinuationConfig, prev: WaveState,
                   cur: WaveState, s_arc: float, ds: float,
                   points: list[BranchPoint]) -> Branch:
    grid = cur.grid
    E = even_extension_matrix(grid)
    reps = representative_indices(grid)
    h = grid.h
    steps_taken = 0

    def finish(reason):
        theta = None
        if reason == "touched":
            tail = points[-10:]
            gaps = np.array([p.gap for p in tail])
            slopes = np.array([p.crest_slope for p in tail])
            if gaps.size >= 2:
                theta = float(np.polyfit(gaps, slopes, 1)[1])
            else:
                theta = float(slopes[-1])
        return Branch(points=list(points), stop_reason=reason, theta_extrapolated=theta,
                      loop_state={"prev": prev, "cur": cur, "s_arc": s_arc, "ds": ds})

    while True:
        if points[-1].violations:
            return finish("monitor_violation")
        if points[-1].gap <= cfg.tol_touch:
            return finish("touched")
        if steps_taken >= cfg.max_steps:
            return finish("max_steps")

        dc = cur.c - prev.c
        df = cur.f.values - prev.f.values
        norm = _product_norm(dc, df, h)
        if norm == 0.0:
            return finish("step_underflow")
        t_c, t_f = dc / norm, df / norm

        converged = None
        while True:
            c_pred = cur.c + ds * t_c
            f_pred_half = (cur.f.values + ds * t_f)[reps]
            c_ref, f_ref = cur.c, cur.f.values

            def border(c, f_full, _tc=t_c, _tf=t_f, _c0=c_ref, _f0=f_ref, _ds=ds):
                val = _tc * (c - _c0) + float(np.sum(_tf * (f_full - _f0)) * h) - _ds
                return val, _tc, _tf * h

            try:
                converged = bordered_newton(
                    law, grid, c_pred, f_pred_half, border,
                    tol=cfg.tol_newton, max_iter=8,
                    elliptic_tol=cfg.elliptic_tol, delta_floor=cfg.delta_floor,
                    phi_init=cur.phi,
                )
                break
            except (NonConvergenceError, ConfigError):
                ds *= 0.5
                if ds < cfg.ds_min:
                    return finish("step_underflow")

        s_arc += ds
        point = _make_point(law, cfg, converged.state, s_arc, converged.iterations,
                            points[-1].amplitude)
        points.append(point)
        prev, cur = cur, converged.state
        steps_taken += 1
        if converged.iterations <= 3:
            ds = min(ds * 1.3, cfg.ds_max)


def theoretical_theta(law: PressureLaw, c: float) -> float:
    """Corner slope sqrt((a*(c) - exp(-G_c(a*(c)))) / G_c''(a*(c)))."""
    ast = a_star(law, c)
    g0 = g_c(law, c, ast, 0)
    g2 = g_c(law, c, ast, 2)
    radicand = (ast - np.exp(-g0)) / g2
    if radicand <= 0:
        raise ConfigError(
            f"degenerate corner: radicand {radicand:.3e} is not positive at c={c}"
        )
    return float(np.sqrt(radicand))


def _interp_periodic(grid_old: TorusGrid, values: np.ndarray, grid_new: TorusGrid) -> np.ndarray:
    x_old = np.r_[grid_old.nodes, grid_old.L / 2]
    v_old = np.r_[values, values[0]]
    return np.interp(grid_new.nodes, x_old, v_old)


def solve_limit_wave(
    law: PressureLaw,
    L: float,
    seed: Branch,
    cfg: ContinuationConfig,
    M: int | None = None,
) -> WaveState:
    """Singular corner wave from the crest-pinned bordered system.

    The full residual is kept at every half-grid node and the border
    equation pins the crest value to a*(c); the converged pair solves both
    simultaneously, which is exactly the touching condition.
    """
    if seed.stop_reason != "touched":
        raise ContractError(
            f"limit-wave seed must have stopped with reason 'touched', got {seed.stop_reason!r}"
        )
    cfg = cfg.resolved(law, L)
    last = seed.points[-1].state
    grid = last.grid if M is None or M == last.grid.M else TorusGrid(L, M)
    fv = last.f.values if grid is last.grid else _interp_periodic(last.grid, last.f.values, grid)
    reps = representative_indices(grid)
    crest = grid.M // 2

    def border(c, f_full):
        ast = a_star(law, c)
        dast_dc = 2 * c / (3 * ast**2 * law.dp(ast) + ast**3 * law.d2p(ast))
        grad = np.zeros(grid.M)
        grad[crest] = 1.0
        return float(f_full[crest] - ast), -dast_dc, grad

    try:
        result = bordered_newton(
            law, grid, last.c, fv[reps], border,
            tol=cfg.tol_newton, max_iter=40,
            elliptic_tol=cfg.elliptic_tol, delta_floor=cfg.delta_floor,
        )
    except NonConvergenceError as exc:
        raise NonConvergenceError(
            "crest-pinned solve diverged; retrace the seed branch with a tighter tol_touch"
        ) from exc
    return result.state


def holder_diagnostics(f: EvenField, max_pairs: int = 100_000) -> tuple[float, float]:
    """(Lipschitz seminorm, 1/2-Holder seminorm) of a grid field.

    The Lipschitz seminorm is exact over adjacent nodes; the Holder
    seminorm is taken over adjacent pairs plus a subsampled set of node
    pairs within half a period, capped at ``max_pairs`` pairs.
    """
    grid = f.grid
    v, h, L = f.values, grid.h, grid.L
    dv = np.abs(np.diff(np.r_[v, v[0]]))
    lip = float(np.max(dv) / h)
    holder = float(np.max(dv) / np.sqrt(h))

    stride = max(1, int(np.ceil(grid.M / np.sqrt(2 * max_pairs))))
    idx = np.arange(0, grid.M, stride)
    x = grid.nodes[idx]
    vv = v[idx]
    dx = np.abs(x[:, None] - x[None, :])
    dx = np.minimum(dx, L - dx)
    mask = (dx > 0) & (dx <= L / 2)
    ratios = np.abs(vv[:, None] - vv[None, :])[mask] / np.sqrt(dx[mask])
    if ratios.size:
        holder = max(holder, float(np.max(ratios)))
    return lip, holder


# ----------------------------------------------------------------------
# Serialization

BRANCH_COLUMNS = ("s_arc", "c", "amplitude", "min_f", "max_f", "gap",
                  "crest_slope", "residual", "newton_iters")


def branch_to_csv(branch: Branch, path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(BRANCH_COLUMNS) + "\n")
        for p in branch.points:
            row = (p.s_arc, p.state.c, p.amplitude, p.state.min_f, p.state.max_f,
                   p.gap, p.crest_slope, p.state.residual_sup, p.newton_iters)
            fh.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row) + "\n")


def write_checkpoint(path, cfg: ContinuationConfig, L: float, branch: Branch,
                     prev: WaveState, cur: WaveState, s_arc: float, ds: float,
                     extra: dict | None = None) -> None:
    """Persist the loop state needed to continue the trace bit-for-bit."""
    doc = {
        "config": asdict(cfg),
        "L": L,
        "M": cur.grid.M,
        "s_arc": s_arc,
        "ds": ds,
        "n_points": len(branch.points),
        "stop_reason": branch.stop_reason,
        "prev": {"c": prev.c, "f": [f"{v:.17g}" for v in prev.f.values]},
        "cur": {"c": cur.c, "f": [f"{v:.17g}" for v in cur.f.values],
                "phi": [f"{v:.17g}" for v in cur.phi.values]},
        "extra": extra or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def read_checkpoint(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def resume_branch(law: PressureLaw, doc: dict,
                  cfg_override: ContinuationConfig | None = None) -> Branch:
    """Continue a trace from a checkpoint document.

    The returned branch starts at the checkpointed point; subsequent
    points reproduce an uninterrupted trace bit-for-bit.
    """
    from .wave import make_state

    cfg = cfg_override or ContinuationConfig(**doc["config"])
    cfg = cfg.resolved(law, doc["L"])
    grid = TorusGrid(doc["L"], doc["M"])
    prev = make_state(law, doc["prev"]["c"],
                      EvenField(grid, np.array([float(v) for v in doc["prev"]["f"]])),
                      elliptic_tol=cfg.elliptic_tol, delta_floor=cfg.delta_floor)
    phi0 = None
    if "phi" in doc["cur"]:
        phi0 = EvenField(grid, np.array([float(v) for v in doc["cur"]["phi"]]))
    cur = make_state(law, doc["cur"]["c"],
                     EvenField(grid, np.array([float(v) for v in doc["cur"]["f"]])),
                     elliptic_tol=cfg.elliptic_tol, delta_floor=cfg.delta_floor, phi0=phi0)
    seed = _make_point(law, cfg, cur, doc["s_arc"], 0, None)
    return _continue_loop(law, cfg, prev, cur, s_arc=doc["s_arc"], ds=doc["ds"],
                          points=[seed])
