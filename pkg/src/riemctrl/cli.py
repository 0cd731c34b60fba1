"""Command-line driver: ``riemctrl --config run.json [--out report.json]``.

Exit codes: 0 success, 2 shooting did not converge, 3 invalid configuration,
4 numerical failure (metric not SPD, chart exit, non-finite values), 1 I/O.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from riemctrl.config import RunConfig, load_config
from riemctrl.covariant import equivalence_check
from riemctrl.dynamics import ControlCurve, State, simulate
from riemctrl.errors import (
    ConfigError,
    DimensionMismatch,
    InvalidParams,
    IoError,
    NoConvergence,
    NumericError,
    ValidationError,
)
from riemctrl.geometry import point_geometry, ricci_residuals
from riemctrl.io import read_trajectory_csv, write_trajectory_csv
from riemctrl.models import builtin_model
from riemctrl.pontryagin import shoot

EXIT_OK = 0
EXIT_IO = 1
EXIT_NO_CONVERGENCE = 2
EXIT_INVALID = 3
EXIT_NUMERIC = 4

# residual thresholds for check-geometry: (analytic, finite-difference)
RICCI_TOL = (1e-10, 1e-6)
ANTISYMMETRY_TOL = (1e-9, 1e-5)


def seed_from_env(default=0):
    raw = os.environ.get("RIEMCTRL_SEED")
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValidationError("RIEMCTRL_SEED", f"not an integer: {raw!r}") from None


def _check_geometry(cfg: RunConfig, model):
    rng = np.random.default_rng(seed_from_env())
    points = model.chart.sample(rng, cfg.samples)
    sym = ricci1 = ricci2 = anti = 0.0
    for q in points:
        geo = point_geometry(model, q, curvature=True)
        sym = max(sym, float(np.abs(geo.gamma - np.transpose(geo.gamma, (0, 2, 1))).max()))
        r1, r2 = ricci_residuals(model, q)
        ricci1 = max(ricci1, float(np.abs(r1).max()))
        ricci2 = max(ricci2, float(np.abs(r2).max()))
        anti = max(anti, float(np.abs(geo.riemann + np.transpose(geo.riemann, (0, 1, 3, 2))).max()))
    which = 0 if model.analytic else 1
    ok = sym == 0.0 and max(ricci1, ricci2) <= RICCI_TOL[which] and anti <= ANTISYMMETRY_TOL[which]
    report = {
        "samples": int(cfg.samples),
        "analytic": model.analytic,
        "christoffel_symmetry": sym,
        "ricci_residual_metric": ricci1,
        "ricci_residual_inverse": ricci2,
        "riemann_antisymmetry": anti,
        "ricci_tolerance": RICCI_TOL[which],
        "antisymmetry_tolerance": ANTISYMMETRY_TOL[which],
        "passed": ok,
    }
    summary = (
        f"{cfg.samples} points: max Ricci residuals {ricci1:.2e} / {ricci2:.2e}, "
        f"Riemann antisymmetry {anti:.2e}, {'pass' if ok else 'FAIL'}"
    )
    return report, summary, EXIT_OK if ok else EXIT_NUMERIC


def _control_curve(cfg: RunConfig, model):
    if cfg.control is None:
        return None
    if isinstance(cfg.control, str):
        tr = read_trajectory_csv(cfg.control)
        if tr.u is None:
            raise ValidationError("control", f"{cfg.control} has no u columns")
        if tr.dim != model.dim:
            raise ValidationError("control", "control dimension does not match the model")
        return ControlCurve(tr.times, tr.u)
    return ControlCurve.constant(cfg.control, cfg.T)


def _energy_drift(tr):
    return float(np.abs(tr.energy - tr.energy[0]).max())


def _simulate(cfg: RunConfig, model):
    tr = simulate(model, State(cfg.q0, cfg.qdot0), _control_curve(cfg, model), cfg.T, cfg.steps)
    if cfg.trajectory_csv:
        write_trajectory_csv(tr, cfg.trajectory_csv)
    report = {
        "q_T": tr.q[-1].tolist(),
        "qdot_T": tr.qdot[-1].tolist(),
        "cost": tr.cost,
        "energy_drift": _energy_drift(tr),
    }
    summary = f"simulated {cfg.steps} steps to T={cfg.T}: q(T)={np.round(tr.q[-1], 6).tolist()}, J={tr.cost:.6g}"
    return report, summary, EXIT_OK


def _solve(cfg: RunConfig, model):
    res = shoot(
        model,
        State(cfg.q0, cfg.qdot0),
        cfg.boundary,
        cfg.T,
        steps=cfg.steps,
        tol=cfg.tol,
        max_iters=cfg.max_iters,
        guess=cfg.guess,
        raise_on_failure=False,
    )
    if cfg.trajectory_csv:
        write_trajectory_csv(res.trajectory, cfg.trajectory_csv)
    H = res.trajectory.H
    report = {
        "boundary": _boundary_json(cfg.boundary),
        "converged": res.converged,
        "iterations": res.iterations,
        "residual": res.residual,
        "residual_history": res.history,
        "p0": res.costate0.p.tolist(),
        "xi0": res.costate0.xi.tolist(),
        "cost": res.cost,
        "hamiltonian_drift": float(np.abs(H - H[0]).max()),
    }
    if res.converged:
        summary = f"converged in {res.iterations} iterations, residual {res.residual:.2e}, J={res.cost:.10g}"
        return report, summary, EXIT_OK
    summary = f"no convergence after {res.iterations} iterations, residual {res.residual:.2e}"
    return report, summary, EXIT_NO_CONVERGENCE


def _boundary_json(b):
    if b.kind == "free":
        return {"type": "free"}
    return {"type": "fixed", "q_T": b.q_T.tolist(), "qdot_T": b.qdot_T.tolist()}


def _compare(cfg: RunConfig, model):
    state0 = State(cfg.q0, cfg.qdot0)
    coarse = equivalence_check(model, state0, cfg.costate0, cfg.T, cfg.steps)
    fine = equivalence_check(model, state0, cfg.costate0, cfg.T, 2 * cfg.steps)
    # the ratio is meaningless once both runs agree to round-off
    if coarse.max_control_diff > 1e-12 and fine.max_control_diff > 0:
        order = float(np.log2(coarse.max_control_diff / fine.max_control_diff))
    else:
        order = None
    report = {
        "T": cfg.T,
        "steps": cfg.steps,
        "max_control_diff": coarse.max_control_diff,
        "max_state_diff": coarse.max_state_diff,
        "order_estimate": order,
        "max_control_diff_halved_step": fine.max_control_diff,
    }
    order_txt = "n/a" if order is None else f"{order:.2f}"
    summary = (
        f"symplectic vs covariant: max |du| {coarse.max_control_diff:.3e}, "
        f"max |dq| {coarse.max_state_diff:.3e}, observed order {order_txt}"
    )
    return report, summary, EXIT_OK


_MODES = {
    "check-geometry": _check_geometry,
    "simulate": _simulate,
    "solve": _solve,
    "compare": _compare,
}


def _write_report(path, report):
    try:
        with open(path, "w") as fh:
            json.dump(report, fh, indent=2, allow_nan=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write report {path}: {exc.strerror}") from exc


def run(cfg: RunConfig, out=None) -> int:
    """Execute one configured run, write its JSON report and return the exit code."""
    out = sys.stdout if out is None else out
    report = {"model": cfg.model, "mode": cfg.mode}
    try:
        model = builtin_model(cfg.model, cfg.params)
        body, summary, code = _MODES[cfg.mode](cfg, model)
        report.update(body)
    except NoConvergence as exc:
        code, summary = EXIT_NO_CONVERGENCE, str(exc)
        report["residual"] = exc.residual
    except (ConfigError, InvalidParams, DimensionMismatch) as exc:
        code, summary = EXIT_INVALID, f"invalid configuration: {exc}"
    except NumericError as exc:
        code, summary = EXIT_NUMERIC, f"numerical failure ({type(exc).__name__}): {exc}"
    except IoError as exc:
        code, summary = EXIT_IO, str(exc)
    report["status"] = "ok" if code == EXIT_OK else "error"
    report["exit_code"] = code
    if code != EXIT_OK:
        report["error"] = summary
    try:
        _write_report(cfg.report, report)
    except IoError as exc:
        print(exc, file=sys.stderr)
        return code or EXIT_IO
    print(f"[{cfg.mode}] {cfg.model}: {summary}", file=out)
    return code


def build_parser():
    parser = argparse.ArgumentParser(
        prog="riemctrl",
        description="Geometry checks, simulation, optimal-control shooting and formulation comparison.",
    )
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="JSON report path (overrides the config)")
    parser.add_argument("--steps", type=int, help="RK4 step count (overrides the config)")
    parser.add_argument("--tol", type=float, help="shooting tolerance (overrides the config)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.steps is not None:
            if args.steps < 2:
                raise ValidationError("steps", "must be >= 2")
            cfg = replace(cfg, steps=args.steps)
        if args.tol is not None:
            if not args.tol > 0:
                raise ValidationError("tol", "must be positive")
            cfg = replace(cfg, tol=args.tol)
        if args.out:
            cfg = replace(cfg, report=args.out)
        seed_from_env()
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        if args.out:
            try:
                _write_report(args.out, {"status": "error", "exit_code": EXIT_INVALID, "error": str(exc)})
            except IoError:
                pass
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
