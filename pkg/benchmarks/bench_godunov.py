#!/usr/bin/env python3
"""Time the compiled and pure-Python Godunov kernels on the same runs.

    python3 benchmarks/bench_godunov.py --cells 200 800 3200 --repeat 3
"""
from __future__ import annotations

import argparse
import json
import statistics
import time

import numpy as np

from ibvpcheck import _backend
from ibvpcheck.experiments import constant_state_problem, riemann_problem
from ibvpcheck.solver import Grid1D, solve


def _time(problem, cells, backend, repeat):
    runs = []
    field = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        field = solve(problem, Grid1D(cells, problem.domain), backend=backend, store=False)
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs), field


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, nargs="+", default=[200, 800, 3200])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", action="store_true", help="print machine-readable rows")
    args = ap.parse_args(argv)

    if _backend.compiled_kernels is None:
        print("compiled kernels not built; only the Python path is timed")
    problems = [constant_state_problem(), riemann_problem("inflow-shock"), riemann_problem("sonic-left")]
    rows = []
    for problem in problems:
        for m in args.cells:
            py, f_py = _time(problem, m, "python", args.repeat)
            row = {"problem": problem.name, "cells": m, "steps": int(f_py.times.size - 1),
                   "python_s": py}
            if _backend.compiled_kernels is not None:
                cc, f_cc = _time(problem, m, "compiled", args.repeat)
                row["compiled_s"] = cc
                row["speedup"] = py / cc
                # both paths must produce the same field
                row["max_diff"] = float(np.max(np.abs(f_py.values[-1] - f_cc.values[-1])))
            rows.append(row)
    if args.json:
        print(json.dumps(rows, indent=2))
        return 0
    head = f"{'problem':<16}{'cells':>7}{'steps':>8}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>9}{'max diff':>11}"
    print(head)
    for r in rows:
        print(f"{r['problem']:<16}{r['cells']:>7}{r['steps']:>8}{r['python_s']:>12.4f}"
              f"{r.get('compiled_s', float('nan')):>14.4f}{r.get('speedup', float('nan')):>9.2f}"
              f"{r.get('max_diff', float('nan')):>11.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
