"""Reference problems and the studies run by the command-line tool."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .boundary import evaluate_batch
from .flux import get_flux
from .residuals import boundary_bumps, residual_mv
from .solver import Grid1D, IBVPProblem, extract_trace, solve

# Riemann data (u0, ub_left, ub_right) on [0, 1] for Burgers
RIEMANN_FIXTURES = {
    "constant-outflow": (1.0, 1.0, -1.0),
    "outflow-left": (-1.0, -0.5, -1.0),
    "inflow-shock": (-0.5, 1.0, -0.5),
    "inflow-rarefaction": (1.0, 0.25, 1.0),
    "sonic-left": (0.5, -0.5, 0.5),
    "inflow-right": (0.5, 0.5, -1.0),
}

# verdict slack per unit dx for Godunov fields; on the Riemann fixtures the
# worst BLN/MV residual over the catalog bumps is 0.18 dx to 0.27 dx
C_SLACK = 0.5


def _const(c):
    return lambda s: c + 0.0 * np.asarray(s, dtype=float)


def constant_state_problem(horizon=1.0):
    """Burgers on (0, 1) with u0 = 1, u_b(0) = 1, u_b(1) = -1; u = 1 solves it."""
    return IBVPProblem(get_flux("burgers"), _const(1.0), _const(1.0), _const(-1.0),
                       horizon=horizon, name="constant-state")


def riemann_problem(name, horizon=0.5):
    try:
        u0, ul, ur = RIEMANN_FIXTURES[name]
    except KeyError:
        raise ValueError(f"unknown Riemann fixture {name!r}; known: {sorted(RIEMANN_FIXTURES)}") from None
    return IBVPProblem(get_flux("burgers"), _const(u0), _const(ul), _const(ur), horizon=horizon,
                       name=name)


# --- smallest boundary constant -----------------------------------------------

@dataclass
class MinConstantResult:
    c_star: float
    bracket: tuple
    binding: dict
    k_points: int
    bump_count: int
    escalations: int
    runtime: float
    base: np.ndarray = field(repr=False, default=None)
    bnd: np.ndarray = field(repr=False, default=None)
    labels: list = field(repr=False, default_factory=list)
    tol: float = 1e-9

    def margin(self, c):
        """Smallest lhs over all (sign, bump, k) with multiplier ``c``."""
        return float(np.min(self.base + c * self.bnd))

    def passes(self, c):
        return self.margin(c) >= -self.tol

    def as_dict(self):
        return {"c_star": self.c_star, "bracket": list(self.bracket), "binding": self.binding,
                "k_points": self.k_points, "bump_count": self.bump_count,
                "escalations": self.escalations, "runtime_s": self.runtime,
                "margin_at_2": self.margin(2.0), "margin_at_half": self.margin(0.5)}


def _mv_parts(field_, problem, ks, bumps):
    """The MV lhs is affine in the boundary multiplier: lhs(c) = base + c bnd."""
    base, bnd, labels = [], [], []
    for phi in bumps:
        for s in ("+", "-"):
            reps = residual_mv(field_, problem, ks, s, phi, 1.0)
            base.append([r.terms["interior"] + r.terms["initial"] for r in reps])
            bnd.append([r.terms["boundary"] for r in reps])
            labels.append((phi.label, s))
    return np.array(base), np.array(bnd), labels


def min_constant(problem: Optional[IBVPProblem] = None, cells=200, k_points=401, per_side=4,
                 lo=0.0, hi=2.0, c_tol=0.02, tol=1e-9, max_escalations=2, field_=None):
    """Bisect for the smallest multiplier ``c`` replacing the Lipschitz constant
    in the MV boundary term such that every boundary-touching bump and every
    ``k`` in ``[-U, U]`` (U = sup of the data) gives a nonnegative lhs."""
    start = time.perf_counter()
    problem = constant_state_problem() if problem is None else problem
    if field_ is None:
        field_ = solve(problem, Grid1D(cells, problem.domain))
    dlo, dhi = problem.data_bound()
    U = max(abs(dlo), abs(dhi), float(np.abs(field_.values).max()))
    escalations = 0
    while True:
        ks = np.linspace(-U, U, k_points)
        bumps = boundary_bumps(problem, per_side)
        base, bnd, labels = _mv_parts(field_, problem, ks, bumps)

        def ok(c):
            return float(np.min(base + c * bnd)) >= -tol

        if not ok(hi):
            raise RuntimeError(f"the MV inequality fails even with c = {hi}")
        a, b = lo, hi
        if ok(a):
            b = a
        while b - a > c_tol:
            mid = 0.5 * (a + b)
            if ok(mid):
                b = mid
            else:
                a = mid
        # escalate when the failure at the lower end is within quadrature noise
        if float(np.min(base + a * bnd)) < -10.0 * tol or b == lo or escalations >= max_escalations:
            break
        escalations += 1
        k_points = 2 * k_points - 1
        per_side *= 2
    vals = base + a * bnd
    i, j = np.unravel_index(np.argmin(vals), vals.shape)
    binding = {"testfn": labels[i][0], "sign": labels[i][1], "k": float(ks[j]),
               "lhs_at_lower": float(vals[i, j])}
    return MinConstantResult(c_star=0.5 * (a + b), bracket=(a, b), binding=binding,
                             k_points=k_points, bump_count=len(bumps), escalations=escalations,
                             runtime=time.perf_counter() - start, base=base, bnd=bnd,
                             labels=labels, tol=tol)


# --- self-convergence ------------------------------------------------------------

def restrict(values, factor):
    return values.reshape(-1, factor).mean(axis=1)


def self_convergence(problem: IBVPProblem, cells=(50, 100, 200, 400, 800), backend=None):
    """L1 distances between successive dx-halved solutions at the final time and
    the observed rates ``log2(e_i / e_{i+1})``."""
    cells = list(cells)
    if any(c2 != 2 * c1 for c1, c2 in zip(cells, cells[1:])):
        raise ValueError("cell counts must double")
    finals = [solve(problem, Grid1D(m, problem.domain), backend=backend, store=False).values[-1]
              for m in cells]
    a, b = problem.domain
    errs = [float(np.sum(np.abs(restrict(fine, 2) - coarse)) * (b - a) / m)
            for m, coarse, fine in zip(cells, finals, finals[1:])]
    rates = [float(np.log2(e1 / e2)) if e2 > 0 and e1 > 0 else float("inf")
             for e1, e2 in zip(errs, errs[1:])]
    return {"cells": cells, "l1_differences": errs, "rates": rates,
            "min_rate": min(rates) if rates else None}


# --- trace admissibility of computed solutions -------------------------------------

def trace_margins(field_, problem, side, richardson=False):
    """BLN margin (worst value over the k grid; >= -tol means admissible) of
    the extracted trace at every logged time."""
    a, b = problem.domain
    xi, nu = (a, -1.0) if side == "left" else (b, 1.0)
    tr = extract_trace(field_, side, richardson)
    datum = field_.datum_left if side == "left" else field_.datum_right
    n = tr.times.size
    res = evaluate_batch(problem.flux, tr.times, np.full(n, xi), np.full(n, nu), tr.values, datum,
                         conditions=("bln",))["bln"]
    return tr.times, res.worst_value, res.tolerance


def trace_study(names=tuple(RIEMANN_FIXTURES), cells=(100, 200, 400, 800), C=1.0, horizon=0.5,
                probe_times=(0.1, 0.25, 0.5)):
    """Pointwise-in-time BLN margins of first-cell traces under dx-halving."""
    rows = []
    for name in names:
        problem = riemann_problem(name, horizon)
        for m in cells:
            f = solve(problem, Grid1D(m, problem.domain))
            for side in ("left", "right"):
                t, margin, tol = trace_margins(f, problem, side)
                neg = np.minimum(margin + tol, 0.0)
                bad = np.nonzero(neg < 0)[0]
                dt = np.diff(t)
                probes = {}
                for pt in probe_times:
                    j = min(int(np.searchsorted(t, pt, side="right")) - 1, t.size - 1)
                    probes[str(pt)] = float(margin[j])
                rows.append({
                    "fixture": name, "cells": m, "dx": f.dx, "side": side,
                    "worst_margin": float(margin.min()),
                    "bound": -C * np.sqrt(f.dx),
                    "within_bound": bool(margin.min() >= -C * np.sqrt(f.dx)),
                    "violated_times": int(bad.size), "logged_times": int(t.size),
                    "last_violation": float(t[bad].max()) if bad.size else None,
                    "l1_violation": float(-np.sum(neg[:-1] * dt)),
                    "margin_at": probes,
                })
    return rows


def trace_study_verdict(rows):
    """Per fixture: bound met at every logged time on every grid, and worst
    margins not getting worse under dx-halving."""
    out = {}
    for name in dict.fromkeys(r["fixture"] for r in rows):
        sub = [r for r in rows if r["fixture"] == name]
        bound_ok = all(r["within_bound"] for r in sub)
        improving = True
        for side in ("left", "right"):
            seq = [r["worst_margin"] for r in sorted((r for r in sub if r["side"] == side),
                                                     key=lambda r: r["cells"])]
            improving &= all(m2 >= m1 - 1e-12 for m1, m2 in zip(seq, seq[1:]))
            # a margin stuck at the same negative value is not an improvement
            if seq and seq[-1] < -1e-9 and abs(seq[-1] - seq[0]) < 1e-12:
                improving = False
        out[name] = {"bound_at_every_time": bound_ok, "improves_under_halving": improving,
                     "passed": bound_ok and improving}
    return out
