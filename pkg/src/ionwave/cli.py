"""Command-line front door.

Subcommands: check-pressure, bifurcation-point, solve-elliptic, psi2,
trace-branch, limit-wave, resume.  Configuration is a JSON document with
strict key validation; every numeric report is JSON, every field or
branch table is CSV with 17 significant digits, and each table gets a
rendered PNG next to it.

Exit statuses: 0 success, 1 validation error, 2 solver non-convergence,
3 monitor violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import (
    BracketError,
    ConfigError,
    ContractError,
    EvaluationError,
    MonitorViolation,
    NonConvergenceError,
)
from .pressure import PressureLaw, power_law, log_law, inverse_law, custom_law, validate_admissibility
from .torus import EvenField, TorusGrid, read_field_csv, write_field_csv
from .elliptic import hb_invert
from .wave import discrete_dispersion_speed, dispersion_speed
from .local_bif import exceptional_periods, local_bifurcation_data
from .continuation import (
    Branch,
    ContinuationConfig,
    branch_to_csv,
    holder_diagnostics,
    read_checkpoint,
    resume_branch,
    solve_limit_wave,
    theoretical_theta,
    trace_branch,
    write_checkpoint,
)

_CONT_FIELDS = {f.name for f in fields(ContinuationConfig)}


@dataclass
class RunConfig:
    pressure: dict = field(default_factory=lambda: {"family": "power",
                                                    "params": {"gamma": 2.0, "kappa": 0.5}})
    L: float = 2 * np.pi
    grid_M: int = 1024
    output_dir: str = "."
    continuation: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | None) -> "RunConfig":
        cfg = cls()
        if path is None:
            return cfg
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
        cfg.update(doc)
        return cfg

    def update(self, doc: dict) -> None:
        for key, val in doc.items():
            if key == "pressure":
                if not isinstance(val, dict) or set(val) - {"family", "params"}:
                    raise ConfigError("pressure must be {family, params}")
                self.pressure.update(val)
            elif key == "L":
                self.L = float(val)
            elif key == "grid_M":
                self.grid_M = int(val)
            elif key == "output_dir":
                self.output_dir = str(val)
            elif key == "continuation":
                unknown = set(val) - _CONT_FIELDS
                if unknown:
                    raise ConfigError(f"unknown continuation keys: {sorted(unknown)}")
                self.continuation.update(val)
            else:
                raise ConfigError(f"unknown config key: {key!r}")
        if self.L <= 0:
            raise ConfigError(f"period L must be positive, got {self.L}")
        if self.grid_M < 32 or self.grid_M % 2:
            raise ConfigError(f"grid_M must be even and >= 32, got {self.grid_M}")

    def set_override(self, assignment: str) -> None:
        if "=" not in assignment:
            raise ConfigError(f"--set expects key=value, got {assignment!r}")
        key, raw = assignment.split("=", 1)
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        parts = key.split(".")
        if parts[0] == "pressure":
            if len(parts) == 2 and parts[1] == "family":
                self.pressure["family"] = val
            elif len(parts) == 3 and parts[1] == "params":
                self.pressure.setdefault("params", {})[parts[2]] = val
            else:
                raise ConfigError(f"cannot set {key!r}")
        elif parts[0] == "continuation" and len(parts) == 2:
            self.update({"continuation": {parts[1]: val}})
        elif len(parts) == 1:
            self.update({parts[0]: val})
        else:
            raise ConfigError(f"cannot set {key!r}")

    def law(self) -> PressureLaw:
        family = self.pressure.get("family", "power")
        params = dict(self.pressure.get("params", {}))
        if family == "power":
            return power_law(float(params.pop("gamma", 2.0)), float(params.pop("kappa", 0.5)))
        if family == "log":
            return log_law(float(params.pop("kappa", 1.0)))
        if family == "inverse":
            return inverse_law(float(params.pop("kappa", 1.0)))
        if family == "custom":
            expr = params.pop("p", None)
            if expr is None:
                raise ConfigError("custom pressure needs params.p, a sympy expression in rho")
            return _sympy_law(expr)
        raise ConfigError(f"unknown pressure family {family!r}")

    def continuation_config(self) -> ContinuationConfig:
        kw = dict(self.continuation)
        kw.setdefault("M", self.grid_M)
        return ContinuationConfig(**kw)


def _sympy_law(expr: str) -> PressureLaw:
    import sympy as sp

    rho = sp.Symbol("rho", positive=True)
    try:
        p = sp.sympify(expr)
    except sp.SympifyError as exc:
        raise ConfigError(f"cannot parse pressure expression {expr!r}: {exc}")
    derivs = [p] + [sp.diff(p, rho, k) for k in range(1, 4)]
    fns = [sp.lambdify(rho, d, "numpy") for d in derivs]
    return custom_law(*fns, label=f"custom({expr})")


def _parse_pressure_shorthand(spec: str) -> dict:
    """'power:gamma=2,kappa=0.5' -> config pressure block."""
    family, _, rest = spec.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            k, _, v = item.partition("=")
            if not _ or not k:
                raise ConfigError(f"bad pressure shorthand item {item!r}")
            params[k] = v if family == "custom" else float(v)
    return {"family": family, "params": params}


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(json.dumps(doc, indent=1, sort_keys=True))


# ----------------------------------------------------------------------
# Subcommands


def _cmd_check_pressure(cfg: RunConfig, args) -> int:
    law = cfg.law()
    report = validate_admissibility(law, args.xi_min, args.xi_max, args.n_samples)
    out = Path(cfg.output_dir)
    doc = {
        "pressure": law.label,
        "sample_range": list(report.sample_range),
        "checks": [{"name": n, "passed": ok, "witness": w} for n, ok, w in report.checks],
        "passed": report.passed,
    }
    _write_json(out / "admissibility.json", doc)
    from .plots import plot_w_trend

    plot_w_trend(out / "w_trend.png", report.w_trend)
    return 0 if report.passed else 1


def _cmd_bifurcation_point(cfg: RunConfig, args) -> int:
    law = cfg.law()
    grid = TorusGrid(cfg.L, cfg.grid_M)
    doc = {
        "L": cfg.L,
        "grid_M": cfg.grid_M,
        "kernel_mode": 1,
        "c0_continuum": dispersion_speed(law, cfg.L, 1),
        "c0_discrete": discrete_dispersion_speed(law, grid, 1),
    }
    _write_json(Path(cfg.output_dir) / "bifurcation_point.json", doc)
    return 0


def _cmd_solve_elliptic(cfg: RunConfig, args) -> int:
    x, fv = read_field_csv(args.input)
    M = len(fv)
    grid = TorusGrid(float(M * (x[1] - x[0])), M)
    f = EvenField(grid, fv)
    cont = cfg.continuation_config()
    sol = hb_invert(f, tol=cont.elliptic_tol, scheme=args.scheme,
                    delta_floor=cont.delta_floor)
    out = Path(cfg.output_dir)
    write_field_csv(out / "phi.csv", sol.phi)
    _write_json(out / "elliptic_report.json", {
        "scheme": sol.scheme,
        "iterations": sol.iterations,
        "final_residual": sol.final_residual,
    })
    from .plots import plot_profile

    plot_profile(out / "phi.png", grid.nodes, fv, sol.phi.values, title="source f and potential phi")
    return 0


def _cmd_psi2(cfg: RunConfig, args) -> int:
    law = cfg.law()
    data = local_bifurcation_data(law, cfg.L, TorusGrid(cfg.L, cfg.grid_M))
    doc = {
        "L": cfg.L,
        "alpha": data.alpha,
        "c0": data.c0,
        "c0_discrete": data.c0_discrete,
        "A": data.A_coef,
        "B": data.B_coef,
        "psi2_operator": data.psi2_operator,
        "psi2_poly": data.psi2_poly,
        "a_coeffs": list(data.a_coeffs),
        "exceptional_periods": exceptional_periods(law),
        "poly_convention": data.poly_convention,
    }
    _write_json(Path(cfg.output_dir) / "psi2.json", doc)
    return 0


def _emit_branch(cfg: RunConfig, law, cont, branch: Branch, out: Path) -> int:
    branch_to_csv(branch, out / "branch.csv")
    ls = branch.loop_state
    write_checkpoint(out / "checkpoint.json", cont, cfg.L, branch,
                     ls["prev"], ls["cur"], ls["s_arc"], ls["ds"],
                     extra={"pressure": cfg.pressure, "grid_M": cfg.grid_M})
    first, last = branch.points[0], branch.points[-1]
    write_field_csv(out / "profile_seed.csv", first.state.f,
                    extra={"phi": first.state.phi.values})
    write_field_csv(out / "profile_final.csv", last.state.f,
                    extra={"phi": last.state.phi.values})
    from .plots import plot_branch, plot_profile

    plot_branch(out / "branch.png", branch)
    plot_profile(out / "profile_final.png", last.state.grid.nodes,
                 last.state.f.values, last.state.phi.values,
                 title=f"final profile (c={last.state.c:.6f})")
    print(f"branch: {len(branch.points)} points, stop_reason={branch.stop_reason}")
    if branch.stop_reason == "monitor_violation":
        print(f"monitor violation at the last point: {last.violations}", file=sys.stderr)
        return 3
    if branch.stop_reason == "step_underflow":
        print("continuation step underflow", file=sys.stderr)
        return 2
    return 0


def _cmd_trace_branch(cfg: RunConfig, args) -> int:
    law = cfg.law()
    cont = cfg.continuation_config()
    branch = trace_branch(law, cfg.L, cont)
    return _emit_branch(cfg, law, cont, branch, Path(cfg.output_dir))


def _cmd_resume(cfg: RunConfig, args) -> int:
    doc = read_checkpoint(args.checkpoint)
    extra = doc.get("extra", {})
    if "pressure" in extra:
        cfg.pressure = extra["pressure"]
    law = cfg.law()
    cont = ContinuationConfig(**doc["config"])
    branch = resume_branch(law, doc)
    return _emit_branch(cfg, law, cont, branch, Path(cfg.output_dir))


def _cmd_limit_wave(cfg: RunConfig, args) -> int:
    law = cfg.law()
    cont = cfg.continuation_config()
    out = Path(cfg.output_dir)
    if args.checkpoint:
        doc = read_checkpoint(args.checkpoint)
        branch = resume_branch(law, doc)
    else:
        branch = trace_branch(law, cfg.L, cont)
    if branch.stop_reason != "touched":
        print(f"branch stopped with {branch.stop_reason}; cannot pin the limit wave",
              file=sys.stderr)
        return 2
    state = solve_limit_wave(law, cfg.L, branch, cont, M=cfg.grid_M)

    from .pressure import g_c
    from .torus import second_derivative

    theta_form = theoretical_theta(law, state.c)
    phi_xx0 = second_derivative(state.phi).values[state.grid.M // 2]
    g2 = g_c(law, state.c, state.a_star_c, 2)
    theta_ell = float(np.sqrt(max(-phi_xx0 / g2, 0.0)))
    lip, hol = holder_diagnostics(state.f)
    write_field_csv(out / "limit_wave.csv", state.f, extra={"phi": state.phi.values})
    _write_json(out / "theta.json", {
        "c_infinity": state.c,
        "a_star": state.a_star_c,
        "crest_slope": state.crest_slope,
        "theta_exponential_form": theta_form,
        "theta_elliptic_form": theta_ell,
        "slope_over_theta": state.crest_slope / theta_form,
        "lipschitz_seminorm": lip,
        "half_holder_seminorm": hol,
    })
    from .plots import plot_profile

    plot_profile(out / "limit_wave.png", state.grid.nodes, state.f.values,
                 state.phi.values, title=f"corner wave (c={state.c:.6f})")
    return 0


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ionwave",
                                 description="periodic ion-acoustic traveling waves")
    ap.add_argument("--config", default=None, help="JSON config file")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config field (dotted path)")
    ap.add_argument("--output-dir", default=None)
    ap.add_argument("--grid-M", type=int, default=None)
    sub = ap.add_subparsers(dest="command", required=True)

    cp = sub.add_parser("check-pressure", help="sampled admissibility report")
    cp.add_argument("--xi-min", type=float, default=1e-3)
    cp.add_argument("--xi-max", type=float, default=1e3)
    cp.add_argument("--n-samples", type=int, default=64)

    sub.add_parser("bifurcation-point", help="bifurcation speed data")

    se = sub.add_parser("solve-elliptic", help="invert -phi'' + e^phi = f")
    se.add_argument("--input", required=True, help="CSV with columns x,f")
    se.add_argument("--scheme", choices=["newton", "k_fixed_point"], default="newton")

    ps = sub.add_parser("psi2", help="local bifurcation data")
    ps.add_argument("--pressure", default=None, metavar="FAMILY:K=V,...",
                    help="pressure shorthand, e.g. power:gamma=2,kappa=0.5")
    ps.add_argument("--L", type=float, default=None)

    sub.add_parser("trace-branch", help="pseudo-arclength branch trace")

    lw = sub.add_parser("limit-wave", help="crest-pinned corner wave")
    lw.add_argument("--checkpoint", default=None)

    rs = sub.add_parser("resume", help="continue a trace from a checkpoint")
    rs.add_argument("--checkpoint", required=True)
    return ap


_DISPATCH = {
    "check-pressure": _cmd_check_pressure,
    "bifurcation-point": _cmd_bifurcation_point,
    "solve-elliptic": _cmd_solve_elliptic,
    "psi2": _cmd_psi2,
    "trace-branch": _cmd_trace_branch,
    "limit-wave": _cmd_limit_wave,
    "resume": _cmd_resume,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        for assignment in args.set:
            cfg.set_override(assignment)
        if args.output_dir is not None:
            cfg.output_dir = args.output_dir
        if args.grid_M is not None:
            cfg.update({"grid_M": args.grid_M})
        if getattr(args, "pressure", None):
            cfg.pressure = _parse_pressure_shorthand(args.pressure)
        if getattr(args, "L", None):
            cfg.update({"L": args.L})
        Path(cfg.output_dir).mkdir(parents=True, exist_ok=True)
        return _DISPATCH[args.command](cfg, args)
    except (ConfigError, ContractError, EvaluationError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except (NonConvergenceError, BracketError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except MonitorViolation as exc:
        print(f"monitor violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
