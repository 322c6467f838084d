"""Command line entry point: ``flatgap {solve,sweep,ode,verify}``.

Exit codes: 0 success, 1 verification failure, 2 malformed configuration, 3 solver failure.
The output directory is taken from ``--out``, else ``$FLATGAP_OUTPUT_DIR``, else the config.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .blowup_lab import SweepError, derivative_bounds, fit_exponent, solve_one, spread, sweep
from .config import ConfigError, ExperimentConfig, dump_config, load_config
from .errors import DomainError, FitError, SolverError
from .geometry import Profile
from .harmonics import ModeIndex

__all__ = ["main", "run_solve", "run_sweep", "run_ode", "run_verify", "ENV_OUTPUT"]

ENV_OUTPUT = "FLATGAP_OUTPUT_DIR"
EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

log = logging.getLogger("flatgap")


def _out_dir(cfg: ExperimentConfig, override: str | None) -> Path:
    path = Path(override or os.environ.get(ENV_OUTPUT) or cfg.output.dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _solve_kw(cfg: ExperimentConfig) -> dict:
    return {
        "nt": cfg.grid.nt,
        "refine": cfg.grid.refine,
        "grid_kw": cfg.grid.radial_kw(),
        "jitter": cfg.probe_jitter,
        "seed": cfg.seed,
    }


def _timed(cfg: ExperimentConfig, rec):
    if not cfg.output.timing:
        rec.wall_ms = 0.0
    return rec


def _oracles(cfg: ExperimentConfig) -> dict:
    out = {}
    p = cfg.problem
    if cfg.oracles.manufactured:
        from .manufactured import mode_mms, radial_mms

        m, r = mode_mms(p), radial_mms(p)
        out["manufactured"] = {
            "mode_pde": {"errors": m.errors, "ratios": m.ratios},
            "radial_bvp": {"errors": r.errors, "ratios": r.ratios},
        }
    if cfg.oracles.three_d:
        if p.n == 3 and p.mode_k == 1:
            from .oracle3d import mode_energy_fraction, solve_voxel

            eps3 = max(p.epsilon, 0.1)
            sol = solve_voxel(Profile(p.a, p.r0, p.gamma, cfg.remainder), eps3, lambda x, y, z: x)
            frac, _ = mode_energy_fraction(sol, ModeIndex(1, 1))
            out["three_d"] = {"epsilon": eps3, "grid": 33, "energy_fraction": frac}
        else:
            out["three_d"] = {"skipped": "requires n = 3 and k = 1"}
    return out


def run_solve(cfg: ExperimentConfig, out: str | None = None) -> int:
    p = cfg.problem
    profile = Profile(p.a, p.r0, p.gamma, cfg.remainder)
    try:
        rec, fld, grad = solve_one(p, profile, **_solve_kw(cfg))
    except (SolverError, DomainError) as exc:
        print(f"error: solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _timed(cfg, rec)
    d = _out_dir(cfg, out)
    io.write_field_csv(d / "field.csv", fld, chart="flattened")
    io.write_field_csv(d / "gradient.csv", grad, chart="physical")
    if cfg.output.binary:
        io.write_field_binary(d / "field.fgb", fld)
    summary = {
        "kind": "solve",
        "control_case": p.is_convex_control,
        **rec.as_dict(),
        "method": fld.diagnostics["method"],
        "derivative_bounds": derivative_bounds(p, fld),
        "oracles": _oracles(cfg),
        "config": cfg.to_dict(),
    }
    io.write_json(d / "summary.json", summary)
    print(f"sup_grad = {io.fmt(rec.sup_grad)} at r = {io.fmt(rec.r_star)}; wrote {d}")
    return EXIT_OK


def run_sweep(cfg: ExperimentConfig, out: str | None = None, workers: int | None = None) -> int:
    if len(cfg.epsilons) < 3:
        print("error: key 'sweep.epsilons': a sweep needs at least 3 values", file=sys.stderr)
        return EXIT_CONFIG
    p = cfg.problem
    d = _out_dir(cfg, out)
    workers = workers or os.cpu_count() or 1
    kw = _solve_kw(cfg)
    if cfg.remainder:
        kw["profile"] = Profile(p.a, p.r0, p.gamma, cfg.remainder)
    try:
        records = sweep(p, cfg.epsilons, workers=workers, **kw)
    except SweepError as exc:
        io.write_sweep_csv(d / "sweep.csv", [_timed(cfg, r) for r in exc.records])
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    records = [_timed(cfg, r) for r in records]
    io.write_sweep_csv(d / "sweep.csv", records)
    try:
        fit = fit_exponent(records)
    except FitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    io.write_json(d / "fit.json", {
        "kind": "sweep",
        "control_case": p.is_convex_control,
        "fit": fit.as_dict(),
        "abs_exponent": abs(fit.exponent),
        "spread": spread(records),
        "max_osc_ratio": max(r.osc_ratio for r in records),
        "config": cfg.to_dict(),
    })
    print(f"s = {fit.exponent:.6f} over {len(records)} epsilons; wrote {d}")
    return EXIT_OK


def run_ode(cfg: ExperimentConfig, out: str | None = None) -> int:
    from .reduced_ode import (
        HomogeneousSolution,
        bootstrap_schedule,
        log_integrating_factor,
        log_integrating_factor_quad,
        radial_grid,
        solve_homogeneous,
    )

    p = cfg.problem
    grid = radial_grid(p.r0, p.epsilon, refine=cfg.grid.refine, **cfg.grid.radial_kw())
    try:
        hs = solve_homogeneous(p, grid) if p.mode_k >= 1 else HomogeneousSolution.constant(grid)
    except (SolverError, DomainError) as exc:
        print(f"error: homogeneous solve failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    r = grid.nodes
    logmu = np.full(r.size, np.nan)
    quad_err = None
    if p.r0 > 0 or p.n == 2:
        s0 = p.r0 / 2
        m = r >= s0
        if s0 == 0.0:
            m &= r > 0
        logmu[m] = log_integrating_factor(p, r[m])
        ts = r[m][:: max(1, m.sum() // 50)]
        quad_err = max(
            abs(log_integrating_factor_quad(p, float(t)) - float(log_integrating_factor(p, t)))
            / max(abs(float(log_integrating_factor(p, t))), 1e-300)
            for t in ts
        )
    d = _out_dir(cfg, out)
    with (d / "ode.csv").open("w") as fh:
        fh.write(f"# flatgap-ode schema_version={io.SCHEMA_VERSION}\n")
        fh.write("r,h,dh,log_integrating_factor\n")
        for row in zip(r, hs.h.values, hs.dh.values, logmu):
            fh.write(",".join(io.fmt(v) for v in row) + "\n")
    io.write_json(d / "ode.json", {
        "kind": "ode",
        "k": p.mode_k,
        "C1": hs.C1,
        "a_cut": hs.a_cut,
        "halvings": len(hs.history),
        "bounds_ok": hs.bounds_ok,
        "max_difference_quotient": hs.max_difference_quotient(),
        "integrating_factor_max_rel_err": quad_err,
        "bootstrap_schedule": bootstrap_schedule(p.gamma),
        "config": cfg.to_dict(),
    })
    print(f"C1 = {hs.C1}; bounds_ok = {hs.bounds_ok}; wrote {d}")
    return EXIT_OK


def run_verify(faults=()) -> int:
    from .verify import format_report, run_checks

    checks = run_checks(faults)
    sys.stdout.write(format_report(checks))
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flatgap", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("solve", "one mode solve: field, gradient and summary"),
        ("sweep", "epsilon sweep with exponent fit"),
        ("ode", "homogeneous solution and integrating factor"),
    ):
        sp_ = sub.add_parser(name, help=helptext)
        sp_.add_argument("config", help="YAML experiment config")
        sp_.add_argument("--out", help=f"output directory (overrides ${ENV_OUTPUT})")
        if name == "sweep":
            sp_.add_argument("--workers", type=int, default=None,
                             help="worker processes (default: available cores)")
        sp_.add_argument("--print-config", action="store_true",
                         help="print the parsed config and exit")
    v = sub.add_parser("verify", help="run the invariant suite")
    v.add_argument("--inject-fault", action="append", default=[], help=argparse.SUPPRESS)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify":
        try:
            return run_verify(tuple(args.inject_fault))
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.print_config:
        sys.stdout.write(dump_config(cfg))
        return EXIT_OK
    if args.command == "solve":
        return run_solve(cfg, args.out)
    if args.command == "sweep":
        if args.workers is not None and args.workers < 1:
            print("error: --workers must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        return run_sweep(cfg, args.out, args.workers)
    return run_ode(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
