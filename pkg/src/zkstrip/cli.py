"""Command-line entry point: ``zkstrip {run,check,sweep,info}``.

Exit codes: 0 success (or check passed), 1 check failed, 2 configuration
error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _kernels, basis
from .basis import ConfigurationError, Grid, SpectralField
from .diagnostics import (
    CheckReport,
    continuous_dependence,
    energy,
    energy_identity_residual,
    fit_constant,
    interpolation_check,
    interpolation_exponent,
    local_smoothing,
    mass,
    random_test_functions,
    weak_residual,
)
from .io import (
    ConfigFile,
    invariants_rows,
    load_config,
    resolve_out_dir,
    write_invariants,
    write_plot_script,
    write_snapshot,
    write_summary,
)
from .nonlinearity import TruncatedNonlinearity
from .profiles import make_profile, random_bump_family
from .propagator import rates
from .solver import SlabFailure, regularization_sweep, run
from .weights import make_rho

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

CHECKS = ("conservation", "interpolation", "weak-residual", "energy-identity", "dependence", "smoothing")
SWEEPS = ("h", "delta", "t0", "grid")

_SOLVER_ERRORS = (SlabFailure, OverflowError, FloatingPointError)


def _run(cfg: ConfigFile, run_cfg=None, initial=None):
    run_cfg = cfg.run if run_cfg is None else run_cfg
    u0 = cfg.initial_field(run_cfg.grid) if initial is None else initial
    return run(u0, cfg.forcing_fn(run_cfg.grid), run_cfg, cfg.make_flux())


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def cmd_run(cfg: ConfigFile, out: Path, plot_script: bool = False) -> int:
    traj = _run(cfg)
    nl = cfg.make_flux()
    alpha = float(cfg.diagnostics.get("alpha", 0.0))
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    for i, (t, c) in enumerate(zip(traj.times, traj.coeffs)):
        write_snapshot(snap_dir / f"snap_{i:05d}.zks", SpectralField(traj.grid, c), t, nl.name, cfg.run.delta, cfg.run.h)
    rows = invariants_rows(traj, nl, alpha)
    write_invariants(out / "invariants.csv", rows)
    m0, e0 = rows[0]["mass"], rows[0]["energy"]
    summary = {
        "config": cfg.raw,
        "run": cfg.run.describe(),
        "flux": nl.name,
        "snapshots": len(traj.times),
        "slabs": len(traj.iterations),
        "iterations_total": int(sum(traj.iterations)),
        "halvings": traj.info.get("halvings", 0),
        "final_slab_length": traj.info.get("final_slab_length"),
        "max_aliasing": traj.info.get("max_aliasing"),
        "max_abs_u": traj.info.get("max_abs_u"),
        "backend": traj.info.get("backend"),
        "flags": traj.flags,
        "mass_drift": _rel(rows[-1]["mass"], m0),
        "energy_drift": _rel(rows[-1]["energy"], e0),
    }
    write_summary(out / "summary.json", summary)
    if plot_script or cfg.diagnostics.get("plot_script", False):
        write_plot_script(out / "plot_invariants.py")
    print(f"wrote {len(traj.times)} snapshots, invariants.csv and summary.json to {out}")
    return EXIT_OK


def _rel(value: float, ref: float) -> float:
    if value == ref:
        return 0.0
    return abs(value - ref) / abs(ref) if ref != 0 else math.inf


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def check_conservation(cfg: ConfigFile, rng) -> CheckReport:
    p = cfg.check_params("conservation")
    mass_tol = float(p.get("mass_tol", 1e-8))
    energy_tol = float(p.get("energy_tol", 1e-6))
    traj = _run(cfg)
    nl = cfg.make_flux()
    m = [mass(SpectralField(traj.grid, c)) for c in traj.coeffs]
    e = [energy(SpectralField(traj.grid, c), nl) for c in traj.coeffs]
    dm = max(_rel(v, m[0]) for v in m)
    de = max(_rel(v, e[0]) for v in e)
    return CheckReport(
        "conservation",
        {"run": cfg.run.describe(), "flux": nl.name},
        {"mass_drift": dm, "energy_drift": de, "mass": m[0], "energy": e[0]},
        {"mass_tol": mass_tol, "energy_tol": energy_tol},
        dm <= mass_tol and de <= energy_tol,
        notes=list(traj.flags),
    )


def _parse_q(q) -> float:
    if isinstance(q, str):
        if q.lower() in ("inf", "infinity"):
            return math.inf
        raise ConfigurationError(f"q must be a number or 'inf', got {q!r}")
    return float(q)


def check_interpolation(cfg: ConfigFile, rng) -> CheckReport:
    p = cfg.check_params("interpolation")
    k, m, q = int(p.get("k", 1)), int(p.get("m", 0)), _parse_q(p.get("q", 2))
    rho = make_rho(float(p.get("alpha", 1.0)), float(p.get("beta", 1.0)))
    members = int(p.get("members", 100))
    if members < 1:
        raise ConfigurationError("members must be >= 1")
    fam = random_bump_family(cfg.grid, members, rng)
    reps = [interpolation_check(psi, rho, rho, k, m, q) for psi in fam]
    needed = [r.measured["needed_c"] for r in reps]
    c = p.get("c")
    fitted = fit_constant(needed) if c is None else float(c)
    ok = all(math.isfinite(v) for v in needed) and max(needed) <= fitted
    return CheckReport(
        "interpolation",
        {"k": k, "m": m, "q": q, "members": members, "seed": cfg.seed, "grid": cfg.grid.describe()},
        {"s": interpolation_exponent(k, m, q), "needed_c_max": max(needed), "needed_c_mean": float(np.mean(needed))},
        {"c": fitted},
        ok,
    )


def check_weak_residual(cfg: ConfigFile, rng) -> CheckReport:
    p = cfg.check_params("weak-residual")
    count = int(p.get("count", 5))
    threshold = float(p.get("threshold", 1e-5))
    traj = _run(cfg)
    phis = random_test_functions(traj.grid, cfg.run.T, count, rng)
    res = [weak_residual(traj, phi, TruncatedNonlinearity(cfg.make_flux(), cfg.run.h), cfg.forcing_fn()) for phi in phis]
    return CheckReport(
        "weak-residual",
        {"run": cfg.run.describe(), "count": count, "seed": cfg.seed},
        {"residuals": res, "max_residual": max(res)},
        {"threshold": threshold},
        max(res) <= threshold,
        notes=list(traj.flags),
    )


def check_energy_identity(cfg: ConfigFile, rng) -> CheckReport:
    p = cfg.check_params("energy-identity")
    nl = cfg.make_flux()
    if not (nl.poly is not None and not np.any(nl.poly[1:])):
        raise ConfigurationError("the energy identity applies to linear runs: set [flux] name = 'zero'")
    threshold = float(p.get("threshold", 1e-8))
    rho = make_rho(float(p.get("alpha", 1.0)), float(p.get("beta", 1.0)))
    traj = _run(cfg)
    rep = energy_identity_residual(traj, rho, cfg.forcing_fn(), None, cfg.run.delta)
    rep.fitted["threshold"] = threshold
    rep.passed = rep.measured["relative_residual"] <= threshold
    return rep


def check_dependence(cfg: ConfigFile, rng) -> CheckReport:
    p = cfg.check_params("dependence")
    eps = float(p.get("epsilon", 1e-2))
    pert = dict(p.get("perturbation", {"profile": "bump", "amplitude": 1.0, "width": 1.5, "x0": -2.0}))
    grid_b = cfg.grid
    if "grid" in p:
        gd = {**cfg.grid.describe(), **p["grid"]}
        grid_b = Grid(float(gd["X"]), int(gd["Nx"]), float(gd["L"]), int(gd["Ny"]), gd["case"])
    u = _run(cfg)
    run_b = replace(cfg.run, grid=grid_b)
    base_b = cfg.initial_field(grid_b) if grid_b.same_as(cfg.grid) else make_profile(grid_b, "zero")
    name = pert.pop("profile", "bump")
    v0 = base_b + make_profile(grid_b, name, **pert) * eps
    v = _run(cfg, run_b, v0)
    nl = cfg.make_flux()
    shift = nl.dg0 if p.get("shift", True) else 0.0
    return continuous_dependence(
        u,
        v,
        float(p.get("alpha", 1.0)),
        float(p.get("beta", 1.0)),
        gradient=bool(p.get("gradient", False)),
        shift_speed=shift,
        c=p.get("c"),
    )


def check_smoothing(cfg: ConfigFile, rng) -> CheckReport:
    p = cfg.check_params("smoothing")
    radii = [float(r) for r in p.get("r", [1.0, 2.0, 4.0])]
    traj = _run(cfg)
    vals = [local_smoothing(traj, r) for r in radii]
    ok = all(math.isfinite(v) and v >= 0 for v in vals) and all(b >= a for a, b in zip(vals, vals[1:]))
    m0 = mass(traj.spectral(0))
    return CheckReport(
        "smoothing",
        {"run": cfg.run.describe(), "r": radii},
        {"values": vals, "relative_to_initial_mass": [v / m0 if m0 else 0.0 for v in vals]},
        {},
        ok,
    )


CHECK_FUNCS = {
    "conservation": check_conservation,
    "interpolation": check_interpolation,
    "weak-residual": check_weak_residual,
    "energy-identity": check_energy_identity,
    "dependence": check_dependence,
    "smoothing": check_smoothing,
}


def cmd_check(cfg: ConfigFile, name: str, out: Path | None = None) -> int:
    if name not in CHECK_FUNCS:
        raise ConfigurationError(f"unknown check {name!r}; known: {', '.join(CHECKS)}")
    rng = np.random.default_rng(cfg.seed)
    rep = CHECK_FUNCS[name](cfg, rng)
    text = rep.to_text()
    print(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"check_{name}.json").write_text(text + "\n")
    return EXIT_OK if rep.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _final_distance(a, b) -> float:
    """L2 distance of the final states, compared on the modes both grids carry."""
    ga, gb = a.grid, b.grid
    ca, cb = a.coeffs[-1], b.coeffs[-1]
    if ga.same_as(gb):
        return float(math.sqrt(2.0 * ga.X * np.sum(np.abs(ca - cb) ** 2)))
    if (ga.X, ga.L, ga.case) != (gb.X, gb.L, gb.case):
        raise ConfigurationError("grid sweeps may only change Nx and Ny")
    ja, jb = ga.mode_index, gb.mode_index
    half = min(ga.Nx, gb.Nx) // 2
    ny = min(ga.Ny, gb.Ny)
    if ga.case.value == "d" and ny % 2 == 0:
        ny -= 1
    sel_a = np.concatenate([np.nonzero(ja == j)[0] for j in range(-half + 1, half)])
    sel_b = np.concatenate([np.nonzero(jb == j)[0] for j in range(-half + 1, half)])
    da = ca[sel_a][:, :ny]
    db = cb[sel_b][:, :ny]
    rest = np.sum(np.abs(ca) ** 2) - np.sum(np.abs(da) ** 2) + np.sum(np.abs(cb) ** 2) - np.sum(np.abs(db) ** 2)
    return float(math.sqrt(2.0 * ga.X * (np.sum(np.abs(da - db) ** 2) + max(rest, 0.0))))


def cmd_sweep(cfg: ConfigFile, param: str, out: Path) -> int:
    if param not in SWEEPS:
        raise ConfigurationError(f"unknown sweep parameter {param!r}; known: {', '.join(SWEEPS)}")
    values = cfg.sweep.get(param)
    if not values:
        raise ConfigurationError(f"[sweep] {param} list is missing or empty")
    rows = []
    if param == "h":
        res = regularization_sweep(
            cfg.initial_field(),
            cfg.forcing_fn(),
            cfg.run,
            [float(v) for v in values],
            cfg.make_flux(),
            alpha=float(cfg.sweep.get("alpha", 0.0)),
            couple_delta=bool(cfg.sweep.get("couple_delta", False)),
        )
        for r in res.rows:
            rows.append({"value": r["h"], "next": r["h_next"], "distance": r.get("linf_l2", math.nan), "error": r.get("error", "")})
        n_ok = len(values) - len(res.errors)
    else:
        trajs = []
        for v in values:
            try:
                if param == "delta":
                    rc = replace(cfg.run, delta=float(v))
                elif param == "t0":
                    rc = replace(cfg.run, t0=float(v))
                else:
                    if not (isinstance(v, (list, tuple)) and len(v) == 2):
                        raise ConfigurationError("grid sweep entries are [Nx, Ny] pairs")
                    rc = replace(cfg.run, grid=Grid(cfg.grid.X, int(v[0]), cfg.grid.L, int(v[1]), cfg.grid.case))
                trajs.append(_run(cfg, rc))
            except _SOLVER_ERRORS as exc:
                trajs.append(exc)
        n_ok = sum(not isinstance(t, Exception) for t in trajs)
        for i in range(len(values) - 1):
            a, b = trajs[i], trajs[i + 1]
            row = {"value": values[i], "next": values[i + 1], "distance": math.nan, "error": ""}
            if isinstance(a, Exception) or isinstance(b, Exception):
                row["error"] = "run failed"
            else:
                row["distance"] = _final_distance(a, b)
            rows.append(row)
        if len(values) == 1:
            a = trajs[0]
            rows.append({"value": values[0], "next": "", "distance": math.nan, "error": repr(a) if isinstance(a, Exception) else ""})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "next", "distance", "error"])
    for r in rows:
        w.writerow([_cell(r["value"]), _cell(r["next"]), repr(float(r["distance"])), r["error"]])
    out.mkdir(parents=True, exist_ok=True)
    (out / f"sweep_{param}.csv").write_text(buf.getvalue())
    sys.stdout.write(buf.getvalue())
    if n_ok == 0:
        print("every sweep row failed", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _cell(v) -> str:
    if isinstance(v, (list, tuple)):
        return "x".join(str(int(a)) for a in v)
    return repr(float(v)) if isinstance(v, float) else str(v)


# ---------------------------------------------------------------------------
# info
# ---------------------------------------------------------------------------


def cmd_info(cfg: ConfigFile | None, modes: int = 6) -> int:
    grid = cfg.grid if cfg is not None else Grid(30.0, 256, 2.0 * math.pi, 33, "d")
    delta = cfg.run.delta if cfg is not None else 0.0
    print(f"grid: {grid.describe()}  delta={delta}  backend={_kernels.BACKEND}")
    lam = grid.lam
    print("eigenvalues lambda_l:")
    for l in range(min(modes, grid.Ny)):
        print(f"  l={l:3d}  lambda={float(lam[l])!r}")
    r = rates(grid, delta)
    print("dispersion table (rate = i(xi^3 + xi lambda) - delta(xi^2 + lambda)):")
    print(f"  {'j':>4} {'l':>4} {'xi':>12} {'lambda':>12} {'Re rate':>14} {'Im rate':>14}")
    for j in range(min(modes, grid.Nx // 2)):
        for l in range(min(modes, grid.Ny)):
            print(f"  {j:4d} {l:4d} {grid.xi[j]:12.6g} {lam[l]:12.6g} {r[j, l].real:14.6g} {r[j, l].imag:14.6g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--out", help="output directory (overrides the config and $ZKSTRIP_OUT)")
    common.add_argument("--seed", type=int, help="seed for randomized checks (overrides the config)")
    common.add_argument("--threads", type=int, default=1, help="FFT worker threads (default 1)")
    ap = argparse.ArgumentParser(prog="zkstrip", description="Generalized ZK equations on a strip: simulate and verify.")
    sub = ap.add_subparsers(dest="verb", required=True)
    p_run = sub.add_parser("run", parents=[common], help="run a simulation and write snapshots and invariants")
    p_run.add_argument("--plot-script", action="store_true", help="also write a matplotlib script for the invariants")
    p_check = sub.add_parser("check", parents=[common], help="run one verification check")
    p_check.add_argument("name", help="one of: " + ", ".join(CHECKS))
    p_sweep = sub.add_parser("sweep", parents=[common], help="parameter sweep with a distance table")
    p_sweep.add_argument("param", help="one of: " + ", ".join(SWEEPS))
    sub.add_parser("info", parents=[common], help="print eigenvalues and the dispersion table")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    basis.FFT_WORKERS = args.threads
    try:
        cfg = None
        if args.config:
            cfg = load_config(args.config)
            if args.seed is not None:
                if args.seed < 0:
                    raise ConfigurationError("--seed must be non-negative")
                cfg = replace(cfg, seed=args.seed)
        elif args.verb != "info":
            raise ConfigurationError(f"'{args.verb}' needs --config")
        out = resolve_out_dir(cfg, args.out)
        if args.verb == "run":
            return cmd_run(cfg, out, args.plot_script)
        if args.verb == "check":
            return cmd_check(cfg, args.name, out)
        if args.verb == "sweep":
            return cmd_sweep(cfg, args.param, out)
        return cmd_info(cfg)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _SOLVER_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    finally:
        basis.FFT_WORKERS = 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
