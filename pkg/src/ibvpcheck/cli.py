"""Command-line front end.

Exit status: 0 when every verdict passes, 2 on a mathematical verdict
failure, 1 on usage or configuration errors (and solver aborts).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .boundary import CONDITIONS, evaluate_batch, equivalence_sweep
from .config import ConfigError, DataSpec, ExperimentConfig, to_json
from .entropy import (distance_pair_family, kruzkov_pair, quadratic_pair, semi_kruzkov_pair,
                      shifted_pair_family, smooth_abs_family, smoothed_semi_pair,
                      verify_boundary_pair, verify_entropy_pair)
from .experiments import min_constant, self_convergence
from .flux import get_flux, lipschitz_norm
from .residuals import (catalog_bumps, definition_k_grid, min_lhs, reports_to_csv, residual_surface,
                        residual_sweep)
from .solver import SolverError, solve

EXIT_OK, EXIT_USAGE, EXIT_VERDICT = 0, 1, 2
OUTPUT_ENV = "IBVPCHECK_OUTPUT_DIR"


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which is our verdict code
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="experiment config file (INI)")
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float, help="base verdict tolerance")
    p.add_argument("--grid", type=int, dest="cells", help="number of cells")
    p.add_argument("--k-grid", type=int, dest="k_grid", help="hull grid size for pointwise checks")
    p.add_argument("--output", help="output directory (overrides $%s and the config)" % OUTPUT_ENV)
    p.add_argument("--flux")
    p.add_argument("--horizon", type=float)
    p.add_argument("--u0")
    p.add_argument("--ub-left", dest="ub_left")
    p.add_argument("--ub-right", dest="ub_right")
    p.add_argument("--inject-fault", dest="fault", help=argparse.SUPPRESS)
    return p


def build_parser():
    parser = _Parser(prog="ibvpcheck", description="Boundary-condition and entropy-solution checks "
                     "for scalar balance laws on an interval.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()

    p = sub.add_parser("solve", parents=[common], help="run the Godunov solver and write the field")
    p.add_argument("--series", type=int, default=0,
                   help="also run this many dx-halvings and record the L1 self-convergence rate")
    p.add_argument("--min-rate", type=float, default=0.5)

    p = sub.add_parser("check-boundary", parents=[common], help="pointwise admissibility of one trace")
    p.add_argument("--trace", type=float, required=True)
    p.add_argument("--datum", type=float, required=True)
    p.add_argument("--side", choices=("left", "right"), default="right")
    p.add_argument("--t", type=float, default=0.5)

    p = sub.add_parser("equivalence-sweep", parents=[common],
                       help="agreement of the pointwise conditions on random samples")
    p.add_argument("--samples", type=int)
    p.add_argument("--fluxes", help="comma separated catalog names (default: the config flux)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--range", type=float, default=2.0, dest="U", help="states drawn from [-U, U]")

    p = sub.add_parser("min-constant", parents=[common],
                       help="smallest boundary multiplier in the semi-entropy inequality")
    p.add_argument("--k-points", type=int, default=401)
    p.add_argument("--per-side", type=int, default=4)

    p = sub.add_parser("residuals", parents=[common], help="integral inequality sweep")
    p.add_argument("--definition", choices=("RE", "MV", "E", "BLN", "all"), default="all")
    p.add_argument("--fixture", choices=("solve", "constant"), default="solve",
                   help="'constant' builds the exact field u = u0(0) without solving")
    p.add_argument("--pair-n", type=int, default=100)
    p.add_argument("--slack", type=float, help="verdict slack per unit dx")
    p.add_argument("--per-axis", type=int, default=3)
    p.add_argument("--k-points", type=int)

    p = sub.add_parser("verify-pairs", parents=[common], help="compatibility of the entropy pairs")
    p.add_argument("--samples", type=int, default=1000)
    return parser


def _config(args):
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    over = {k: getattr(args, k, None) for k in ("seed", "tol", "cells", "k_grid", "flux", "horizon")}
    for key in ("u0", "ub_left", "ub_right"):
        val = getattr(args, key, None)
        over[key] = DataSpec.parse(val) if val is not None else None
    if getattr(args, "samples", None) is not None and args.command == "equivalence-sweep":
        over["samples"] = args.samples
    return cfg.with_overrides(**over)


def _outdir(args, cfg):
    path = args.output or os.environ.get(OUTPUT_ENV) or cfg.output
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out, command, cfg, verdict, summary, outputs):
    body = {"tool": "ibvpcheck", "version": __version__, "command": command,
            "config": cfg.as_json_dict(), "config_hash": cfg.digest(), "seed": cfg.seed,
            "backend": _backend.BACKEND, "verdict": verdict, "summary": summary,
            "outputs": sorted(outputs)}
    path = out / f"{command}-manifest.json"
    path.write_text(json.dumps(body, indent=2, sort_keys=True, default=_jsonable) + "\n",
                    encoding="utf-8")
    return path


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


# --- commands --------------------------------------------------------------------

def cmd_solve(args, cfg, out):
    problem, grid = cfg.problem(), cfg.grid()
    t0 = time.perf_counter()
    field = solve(problem, grid)
    elapsed = time.perf_counter() - t0
    field.to_csv(out / "field.csv")
    field.trace_to_csv(out / "trace.csv")
    field.save_binary(out / "field.bin")
    summary = {"steps": int(field.times.size - 1), "dx": field.dx, "final_time": field.horizon,
               "min": float(field.values.min()), "max": float(field.values.max())}
    verdict = "pass"
    if args.series > 0:
        cells = [cfg.cells * 2 ** i for i in range(args.series + 1)]
        conv = self_convergence(problem, cells)
        errs = np.asarray(conv["l1_differences"])
        if np.all(errs > 0) and errs.size >= 2:
            slope = np.polyfit(np.arange(errs.size), np.log2(errs), 1)[0]
            conv["fitted_rate"] = float(-slope)
        else:
            conv["fitted_rate"] = float("inf") if np.all(errs == 0) else None
        summary["self_convergence"] = conv
        rate = conv["fitted_rate"]
        if rate is None or rate < args.min_rate:
            verdict = "fail"
    print(f"solved {problem.name}: {summary['steps']} steps, dx={field.dx:.4g}, "
          f"range [{summary['min']:.6g}, {summary['max']:.6g}] in {elapsed:.3f}s ({field.backend})")
    if "self_convergence" in summary:
        print(f"L1 self-convergence rate {summary['self_convergence']['fitted_rate']}")
    _manifest(out, "solve", cfg, verdict, summary, ["field.csv", "trace.csv", "field.bin"])
    return EXIT_OK if verdict == "pass" else EXIT_VERDICT


def cmd_check_boundary(args, cfg, out):
    flux = get_flux(cfg.flux)
    a, b = cfg.domain
    xi, nu = (a, -1.0) if args.side == "left" else (b, 1.0)
    conds = CONDITIONS + ("strong-bc",)
    res = evaluate_batch(flux, [args.t], [xi], [nu], [args.trace], [args.datum], cfg.k_grid,
                         conditions=conds, base_tol=cfg.tol)
    rows = {}
    print(f"{'condition':<18}{'verdict':<12}{'worst value':>14}{'at k':>12}")
    for c in conds:
        r = res[c]
        ok = bool(r.admissible[0])
        rows[c] = {"verdict": "admissible" if ok else "violated", "worst_value": float(r.worst_value[0]),
                   "worst_k": float(r.worst_k[0]), "tolerance": float(r.tolerance[0])}
        print(f"{c:<18}{rows[c]['verdict']:<12}{rows[c]['worst_value']:>14.6g}{rows[c]['worst_k']:>12.6g}")
    verdicts = {v["verdict"] for k, v in rows.items() if k != "strong-bc"}
    consistent = len(verdicts) == 1
    if not consistent:
        print("conditions disagree")
    (out / "check-boundary.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")
    passed = consistent and verdicts == {"admissible"}
    _manifest(out, "check-boundary", cfg, "pass" if passed else "fail",
              {"trace": args.trace, "datum": args.datum, "side": args.side, "t": args.t,
               "consistent": consistent}, ["check-boundary.json"])
    return EXIT_OK if passed else EXIT_VERDICT


def cmd_equivalence_sweep(args, cfg, out):
    names = args.fluxes.split(",") if args.fluxes else [cfg.flux]
    summary, outputs, bad = {}, [], 0
    for name in names:
        flux = get_flux(name.strip())
        t0 = time.perf_counter()
        rep = equivalence_sweep(flux, cfg.samples, cfg.k_grid, cfg.seed, U=args.U,
                                workers=args.workers, tol=cfg.tol, fault=args.fault)
        stem = "sweep-" + name.strip().replace(":", "_")
        (out / f"{stem}.json").write_text(rep.to_json() + "\n", encoding="utf-8")
        with open(out / f"{stem}.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write(rep.to_csv())
        outputs += [f"{stem}.json", f"{stem}.csv"]
        n = len(rep.disagreements)
        bad += n
        summary[name] = {"samples": rep.samples, "disagreements": n}
        print(f"{name}: {rep.samples} samples, {n} disagreements ({time.perf_counter() - t0:.1f}s)")
    _manifest(out, "equivalence-sweep", cfg, "pass" if bad == 0 else "fail", summary, outputs)
    return EXIT_OK if bad == 0 else EXIT_VERDICT


def cmd_min_constant(args, cfg, out):
    res = min_constant(cfg.problem(), cells=cfg.cells, k_points=args.k_points,
                       per_side=args.per_side, tol=cfg.tol)
    body = res.as_dict()
    body["passes_at_2"] = res.passes(2.0)
    body["passes_at_half"] = res.passes(0.5)
    (out / "min-constant.json").write_text(json.dumps(body, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
    print(f"c* = {res.c_star:.4f}  bracket [{res.bracket[0]:.4f}, {res.bracket[1]:.4f}]  "
          f"binding {res.binding['testfn']} sign {res.binding['sign']} k={res.binding['k']:.4g}  "
          f"({res.runtime:.2f}s)")
    summary = {k: v for k, v in body.items() if k != "runtime_s"}
    _manifest(out, "min-constant", cfg, "pass", summary, ["min-constant.json"])
    return EXIT_OK


def _constant_field(cfg):
    """Exact constant field u = u0(0) on the config grid (no solver)."""
    from .solver import Field1D
    grid = cfg.grid()
    c = float(cfg.u0(0.0))
    steps = max(1, int(np.ceil(cfg.horizon / (cfg.cfl * grid.dx))))
    times = np.linspace(0.0, cfg.horizon, steps + 1)
    vals = np.full((times.size, grid.cells), c)
    log = np.full((times.size, 2), c)
    return Field1D(grid, times, vals, log, log.copy(), cfg.ub_left(times), cfg.ub_right(times))


def cmd_residuals(args, cfg, out):
    from .experiments import C_SLACK
    problem = cfg.problem()
    flux = problem.flux
    if args.fixture == "constant":
        field = _constant_field(cfg)
        slack = 0.0 if args.slack is None else args.slack
    else:
        field = solve(problem, cfg.grid())
        slack = C_SLACK if args.slack is None else args.slack
    U = max(float(np.abs(field.values).max()), *(abs(v) for v in problem.data_bound()))
    ks = definition_k_grid(U, args.k_points or cfg.k_points)
    L = lipschitz_norm(flux, cfg.horizon, cfg.domain, U + 1.0)
    bumps = [phi for phi in catalog_bumps(problem, args.per_axis)]
    defs = ("RE", "MV", "E", "BLN") if args.definition == "all" else (args.definition,)
    reports = []
    for d in defs:
        if d == "RE":
            pairs = [smoothed_semi_pair(flux, s, args.pair_n) for s in ("+", "-")]
            reports += residual_sweep("RE", field, problem, ks, bumps, L=L, pairs=pairs, tol=cfg.tol,
                                      slack=slack)
        elif d == "E":
            reports += residual_sweep("E", field, problem, ks, bumps, pair=lambda k: kruzkov_pair(flux, k),
                                      tol=cfg.tol, slack=slack)
        else:
            reports += residual_sweep(d, field, problem, ks, bumps, L=L, tol=cfg.tol, slack=slack)
    (out / "residuals.csv").write_text(reports_to_csv(reports), encoding="utf-8")
    (out / "residual-surface.csv").write_text(residual_surface(reports), encoding="utf-8")
    summary = {}
    for d in sorted({r.definition_id for r in reports}):
        sub = [r for r in reports if r.definition_id == d]
        summary[d] = {"count": len(sub), "min_lhs": min_lhs(sub),
                      "failures": sum(not r.passed for r in sub)}
        print(f"{d:<5} {len(sub):>6} residuals  min lhs {summary[d]['min_lhs']:+.3e}  "
              f"failures {summary[d]['failures']}")
    threshold = cfg.tol + slack * field.dx
    summary = {"definitions": summary, "threshold": threshold, "L": L, "k_points": int(ks.size),
               "bumps": len(bumps), "fixture": args.fixture}
    passed = all(r.passed for r in reports)
    _manifest(out, "residuals", cfg, "pass" if passed else "fail", summary,
              ["residuals.csv", "residual-surface.csv"])
    return EXIT_OK if passed else EXIT_VERDICT


def cmd_verify_pairs(args, cfg, out):
    flux = get_flux(cfg.flux)
    k = 0.25
    entropy = [kruzkov_pair(flux, k), semi_kruzkov_pair(flux, k, "+"), semi_kruzkov_pair(flux, k, "-"),
               quadratic_pair(flux, k), smooth_abs_family(flux, k, 10)]
    boundary = [smoothed_semi_pair(flux, "+", 10), smoothed_semi_pair(flux, "-", 10),
                distance_pair_family(flux, k, 10), distance_pair_family(flux, k),
                shifted_pair_family(kruzkov_pair(flux, k), k, 10)]
    reports = [verify_entropy_pair(p, samples=args.samples, seed=cfg.seed) for p in entropy]
    reports += [verify_boundary_pair(p, samples=args.samples, seed=cfg.seed) for p in boundary]
    rows = [r.as_dict() for r in reports]
    for r in reports:
        print(f"{r.pair:<28} {'ok' if r.passed else 'FAILED ' + ', '.join(r.failed())}")
    (out / "verify-pairs.json").write_text(json.dumps(rows, indent=2, sort_keys=True,
                                                      default=_jsonable) + "\n", encoding="utf-8")
    passed = all(r.passed for r in reports)
    _manifest(out, "verify-pairs", cfg, "pass" if passed else "fail",
              {"pairs": len(reports), "failed": [r.pair for r in reports if not r.passed]},
              ["verify-pairs.json"])
    return EXIT_OK if passed else EXIT_VERDICT


COMMANDS = {"solve": cmd_solve, "check-boundary": cmd_check_boundary,
            "equivalence-sweep": cmd_equivalence_sweep, "min-constant": cmd_min_constant,
            "residuals": cmd_residuals, "verify-pairs": cmd_verify_pairs}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        out = _outdir(args, cfg)
        (out / "config.json").write_text(to_json(cfg) + "\n", encoding="utf-8")
        return COMMANDS[args.command](args, cfg, out)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"ibvpcheck: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverError as exc:
        print(f"ibvpcheck: solver aborted: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"ibvpcheck: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
