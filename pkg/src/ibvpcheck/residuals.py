"""Integral inequalities of the four solution definitions evaluated on a
candidate solution.

A candidate is either a :class:`~ibvpcheck.solver.Field1D` (piecewise constant
in cells and time steps) or a :class:`SmoothSolution` (closed-form ``u(t, x)``).
Test functions are separable polynomial bumps, so on a discrete field every
integral is computed exactly: antiderivatives of the bump factors when the
integrand only depends on ``u``, Gauss-Legendre on the polynomial pieces
otherwise.  The cheap cell-midpoint / step-trapezoid value is kept as the
error indicator.

Each ``residual_*`` accepts an array of states ``k`` and then returns one
report per entry.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .boundary import evaluate_batch, flux_comparison
from .entropy import (BoundaryEntropyPair, EntropyPair, parse_sign, semi_part,
                      semi_sgn, sgn, smoothed_semi_pair)
from .flux import lipschitz_norm
from .quadrature import integrate
from .solver import Field1D, Grid1D, IBVPProblem

DEFINITIONS = ("RE", "MV+", "MV-", "E", "BLN")
BASE_TOL = 1e-9
BUMP_MASS = 32.0 / 35.0
K_POINTS = 33

_GL = {n: np.polynomial.legendre.leggauss(n) for n in (1, 4)}


# --- test functions -----------------------------------------------------------

def bump(s):
    """``((1 - s^2)^+)^3``."""
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1.0, (1.0 - s * s) ** 3, 0.0)


def bump_prime(s):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1.0, -6.0 * s * (1.0 - s * s) ** 2, 0.0)


def bump_antiderivative(s):
    """Antiderivative of :func:`bump` vanishing at 0, constant outside [-1, 1]."""
    s = np.clip(np.asarray(s, dtype=float), -1.0, 1.0)
    s2 = s * s
    return s * (1.0 - s2 + s2 * s2 * (0.6 - s2 / 7.0))


@dataclass(frozen=True)
class TestFunction:
    """``scale * B((t - t0)/rt) * B((x - x0)/rx)``."""

    __test__ = False  # not a pytest class

    t0: float
    rt: float
    x0: float
    rx: float
    scale: float = 1.0
    label: str = "phi"

    def __post_init__(self):
        if not (self.rt > 0 and self.rx > 0):
            raise ValueError("bump radii must be positive")
        if not self.scale > 0:
            raise ValueError("bump scale must be positive")

    def support(self):
        return (self.t0 - self.rt, self.t0 + self.rt, self.x0 - self.rx, self.x0 + self.rx)

    # time factor carries the scale
    def bt(self, t):
        return self.scale * bump((np.asarray(t, dtype=float) - self.t0) / self.rt)

    def dbt(self, t):
        return self.scale * bump_prime((np.asarray(t, dtype=float) - self.t0) / self.rt) / self.rt

    def bx(self, x):
        return bump((np.asarray(x, dtype=float) - self.x0) / self.rx)

    def dbx(self, x):
        return bump_prime((np.asarray(x, dtype=float) - self.x0) / self.rx) / self.rx

    def int_bt(self, t1, t2):
        a = (np.asarray(t1, dtype=float) - self.t0) / self.rt
        b = (np.asarray(t2, dtype=float) - self.t0) / self.rt
        return self.scale * self.rt * (bump_antiderivative(b) - bump_antiderivative(a))

    def int_bx(self, x1, x2):
        a = (np.asarray(x1, dtype=float) - self.x0) / self.rx
        b = (np.asarray(x2, dtype=float) - self.x0) / self.rx
        return self.rx * (bump_antiderivative(b) - bump_antiderivative(a))

    def phi(self, t, x):
        return self.bt(t) * self.bx(x)

    def dphi_dt(self, t, x):
        return self.dbt(t) * self.bx(x)

    def dphi_dx(self, t, x):
        return self.bt(t) * self.dbx(x)

    def scaled(self, factor):
        return TestFunction(self.t0, self.rt, self.x0, self.rx, self.scale * factor, self.label)


def bump_family(box, count, anchor=None, prefix="phi"):
    """``count`` bumps whose closed supports tile ``box = (t_lo, t_hi, x_lo, x_hi)``.

    With ``anchor='left'`` (``'right'``) every bump is centred on ``x_lo``
    (``x_hi``) with radius ``x_hi - x_lo`` and the box is tiled in time only,
    which gives test functions that do not vanish on that boundary.
    """
    t_lo, t_hi, x_lo, x_hi = map(float, box)
    if not (t_hi > t_lo and x_hi > x_lo):
        raise ValueError(f"degenerate box {box!r}")
    count = int(count)
    if count < 1:
        raise ValueError("count must be >= 1")
    if anchor in ("left", "right"):
        nt, nx = count, 1
    elif anchor is None:
        nt = max(d for d in range(1, int(math.isqrt(count)) + 1) if count % d == 0)
        nx = count // nt
    else:
        raise ValueError(f"anchor must be None, 'left' or 'right', got {anchor!r}")
    ht = (t_hi - t_lo) / nt
    out = []
    for i in range(nt):
        t0 = t_lo + (i + 0.5) * ht
        if anchor is None:
            hx = (x_hi - x_lo) / nx
            for j in range(nx):
                out.append(TestFunction(t0, 0.5 * ht, x_lo + (j + 0.5) * hx, 0.5 * hx,
                                        label=f"{prefix}[{i},{j}]"))
        else:
            x0 = x_lo if anchor == "left" else x_hi
            out.append(TestFunction(t0, 0.5 * ht, x0, x_hi - x_lo, label=f"{prefix}-{anchor}[{i}]"))
    return out


def catalog_bumps(problem: IBVPProblem, per_axis=3):
    """Default family for a problem: interior tiles, bumps straddling ``t = 0``
    and bumps centred on each endpoint."""
    a, b = problem.domain
    T = problem.horizon
    width = 0.25 * (b - a)
    fam = bump_family((0.0, T, a, b), per_axis * per_axis, prefix="int")
    fam += [TestFunction(0.0, 0.5 * T, a + (j + 0.5) * (b - a) / per_axis, 0.5 * (b - a) / per_axis,
                         label=f"init[{j}]") for j in range(per_axis)]
    fam += bump_family((0.0, T, a, a + width), per_axis, anchor="left", prefix="bnd")
    fam += bump_family((0.0, T, b - width, b), per_axis, anchor="right", prefix="bnd")
    return fam


def boundary_bumps(problem: IBVPProblem, per_side=4, width=None):
    a, b = problem.domain
    T = problem.horizon
    width = 0.25 * (b - a) if width is None else width
    fam = bump_family((0.0, T, a, a + width), per_side, anchor="left", prefix="bnd")
    fam += bump_family((0.0, T, b - width, b), per_side, anchor="right", prefix="bnd")
    fam += [TestFunction(0.0, 0.5 * T, a, width, label="bnd-left[init]"),
            TestFunction(0.0, 0.5 * T, b, width, label="bnd-right[init]")]
    return fam


def definition_k_grid(U, points=K_POINTS):
    return np.linspace(-U - 1.0, U + 1.0, points)


# --- candidates ---------------------------------------------------------------

@dataclass(frozen=True)
class SmoothSolution:
    """Closed-form candidate ``u(t, x)`` with optional derivatives."""

    u: Callable
    du_dt: Optional[Callable] = None
    du_dx: Optional[Callable] = None
    name: str = "smooth"

    def __call__(self, t, x):
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        return np.asarray(self.u(t, x), dtype=float) + 0.0 * (t + x)


def sample_field(candidate: SmoothSolution, problem: IBVPProblem, grid: Grid1D, dt=None):
    """Piecewise-constant :class:`Field1D` holding the cell averages of
    ``candidate`` at the start of each step (4-point Gauss-Legendre per cell)."""
    grid = Grid1D(grid.cells, tuple(problem.domain), grid.cfl)
    T = problem.horizon
    dt = grid.cfl * grid.dx if dt is None else dt
    times = np.linspace(0.0, T, int(math.ceil(T / dt - 1e-12)) + 1)
    e = grid.edges
    xn, xw = _gl_nodes(e[:-1], e[1:], 4)
    vals = np.stack([np.sum(candidate(t, xn) * xw, axis=1) / grid.dx for t in times])
    a, b = problem.domain
    offs = (np.arange(1, 3) - 0.5) * grid.dx
    tl = candidate(times[:, None], a + offs[None, :])
    tr = candidate(times[:, None], b - offs[None, :])
    return Field1D(grid, times, vals, tl, tr, problem.datum("left", times),
                   problem.datum("right", times), backend="sampled")


@dataclass
class ResidualReport:
    definition_id: str
    entropy: str
    k: float
    testfn: str
    lhs_value: float
    quadrature_error_estimate: float
    tolerance: float
    verdict: str
    terms: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict == "pass"

    def as_dict(self):
        return asdict(self)


@dataclass
class _Density:
    """Integrand pieces of one definition.  All callables broadcast over
    ``(t, x, u, k)``; ``bnd(t, xi, nu, ub, tr, k)`` is the factor of ``phi`` on
    the boundary, already carrying the sign with which it enters the LHS."""

    definition: str
    entropy: str
    A: Callable
    B: Callable
    C: Optional[Callable]
    bnd: Callable
    explicit: bool
    uses_trace: bool


def _explicit(flux):
    return (not flux.autonomous) or flux.has_source or flux.has_div


def _div(flux, t, x, u):
    return flux.div_f(t, x, u) if flux.has_div else 0.0


def _src(flux, t, x, u):
    return flux.source(t, x, u) if flux.has_source else 0.0


def _with_k(flux, t, x, u, k):
    return np.asarray(k, dtype=float) + 0.0 * np.asarray(u, dtype=float)


def _mv_density(flux, sign, L):
    s = parse_sign(sign)
    part, ssgn = semi_part(s), semi_sgn(s)
    label = "MV+" if s > 0 else "MV-"

    def A(t, x, u, k):
        return part(u - k)

    def B(t, x, u, k):
        return ssgn(u - k) * (flux.f(t, x, u) - flux.f(t, x, _with_k(flux, t, x, u, k)))

    def C(t, x, u, k):
        return ssgn(u - k) * (_src(flux, t, x, u) - _div(flux, t, x, _with_k(flux, t, x, u, k)))

    def bnd(t, xi, nu, ub, tr, k):
        return L * part(ub - k)

    return _Density(label, f"semi-kruzkov{label[2]}", A, B,
                    C if flux.has_source or flux.has_div else None, bnd, _explicit(flux), False)


def _bln_density(flux):
    def A(t, x, u, k):
        return np.abs(u - k)

    def B(t, x, u, k):
        return sgn(u - k) * (flux.f(t, x, u) - flux.f(t, x, _with_k(flux, t, x, u, k)))

    def C(t, x, u, k):
        return sgn(u - k) * (_src(flux, t, x, u) - _div(flux, t, x, _with_k(flux, t, x, u, k)))

    def bnd(t, xi, nu, ub, tr, k):
        kk = _with_k(flux, t, xi, tr, k)
        return -sgn(ub - k) * (flux.f(t, xi, tr) - flux.f(t, xi, kk)) * nu

    return _Density("BLN", "kruzkov", A, B, C if flux.has_source or flux.has_div else None,
                    bnd, _explicit(flux), True)


def _re_density(flux, pair: BoundaryEntropyPair, L):
    def A(t, x, u, k):
        return pair.H(u, k)

    def B(t, x, u, k):
        return pair.Q(t, x, u, k)

    def C(t, x, u, k):
        out = pair.dH_dz(u, k) * (_src(flux, t, x, u) - _div(flux, t, x, u))
        if flux.has_div:
            out = out + pair.div_Q(t, x, u, k)
        return out

    def bnd(t, xi, nu, ub, tr, k):
        return L * pair.H(ub, k)

    return _Density("RE", pair.name, A, B, C if flux.has_source or flux.has_div else None,
                    bnd, _explicit(flux), False)


def _e_density(flux, pair: EntropyPair):
    def A(t, x, u, k):
        return pair.eta(u)

    def B(t, x, u, k):
        return pair.q(t, x, u)

    def C(t, x, u, k):
        out = pair.eta_prime(u) * (_src(flux, t, x, u) - _div(flux, t, x, u))
        if flux.has_div:
            out = out + pair.div_q(t, x, u)
        return out

    def bnd(t, xi, nu, ub, tr, k):
        return (-pair.q(t, xi, ub) + pair.eta_prime(ub) * (flux.f(t, xi, ub) - flux.f(t, xi, tr))) * nu

    return _Density("E", pair.name, A, B, C if flux.has_source or flux.has_div else None,
                    bnd, _explicit(flux), True)


# --- evaluation ----------------------------------------------------------------

def _overlap(edges, lo, hi):
    """Indices of intervals ``[edges[i], edges[i+1]]`` meeting ``(lo, hi)`` and
    the clipped end points."""
    idx = np.nonzero((edges[1:] > lo) & (edges[:-1] < hi))[0]
    return idx, np.maximum(edges[idx], lo), np.minimum(edges[idx + 1], hi)


def _check_support(phi: TestFunction, problem: IBVPProblem, terminal: bool):
    t_lo, t_hi, x_lo, x_hi = phi.support()
    a, b = problem.domain
    T = problem.horizon
    if t_hi > T * (1.0 + 1e-14) and not terminal:
        raise ValueError(f"test function {phi.label} does not vanish at t = T; "
                         "use the terminal variant or shrink its support")
    if t_hi <= 0.0 or t_lo >= T or x_hi <= a or x_lo >= b:
        raise ValueError(f"test function {phi.label} misses the space-time domain")


def _gl_nodes(lo, hi, order):
    xg, wg = _GL[order]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return mid[:, None] + half[:, None] * xg[None, :], half[:, None] * wg[None, :]


def _discrete_interior(field: Field1D, dens, phi, k, fine=True):
    t_lo, t_hi, x_lo, x_hi = phi.support()
    T = field.horizon
    steps, ta, tb = _overlap(field.times, max(t_lo, 0.0), min(t_hi, T))
    cells, xa, xb = _overlap(field.grid.edges, x_lo, x_hi)
    K = k.size
    if steps.size == 0 or cells.size == 0:
        return np.zeros(K)
    U = field.values[steps][:, cells]
    if not dens.explicit:
        if fine:
            wt, wdt = phi.int_bt(ta, tb), phi.bt(tb) - phi.bt(ta)
            wx, wdx = phi.int_bx(xa, xb), phi.bx(xb) - phi.bx(xa)
        else:
            tm, xm = 0.5 * (ta + tb), 0.5 * (xa + xb)
            wt, wdt = phi.bt(tm) * (tb - ta), phi.dbt(tm) * (tb - ta)
            wx, wdx = phi.bx(xm) * (xb - xa), phi.dbx(xm) * (xb - xa)
        vals, inv = np.unique(U, return_inverse=True)
        inv = inv.ravel()
        u = vals[:, None]
        kk = k[None, :]
        acc = np.bincount(inv, np.outer(wdt, wx).ravel(), vals.size) @ dens.A(0.0, 0.0, u, kk)
        acc = acc + np.bincount(inv, np.outer(wt, wdx).ravel(), vals.size) @ dens.B(0.0, 0.0, u, kk)
        if dens.C is not None:
            acc = acc + np.bincount(inv, np.outer(wt, wx).ravel(), vals.size) @ dens.C(0.0, 0.0, u, kk)
        return acc
    order = 4 if fine else 1
    tn, tw = _gl_nodes(ta, tb, order)
    xn, xw = _gl_nodes(xa, xb, order)
    bx, dbx = phi.bx(xn), phi.dbx(xn)
    acc = np.zeros(K)
    # chunk over steps to bound memory
    per = max(1, int(2_000_000 // max(1, cells.size * order * order * K)))
    for s0 in range(0, steps.size, per):
        sl = slice(s0, s0 + per)
        t = tn[sl][:, :, None, None, None]
        w_t = tw[sl][:, :, None, None, None]
        x = xn[None, None, :, :, None]
        w_x = xw[None, None, :, :, None]
        u = U[sl][:, None, :, None, None]
        kk = k[None, None, None, None, :]
        bt, dbt = phi.bt(t), phi.dbt(t)
        val = dens.A(t, x, u, kk) * dbt * bx[None, None, :, :, None]
        val = val + dens.B(t, x, u, kk) * bt * dbx[None, None, :, :, None]
        if dens.C is not None:
            val = val + dens.C(t, x, u, kk) * bt * bx[None, None, :, :, None]
        acc += np.sum(val * w_t * w_x, axis=(0, 1, 2, 3))
    return acc


def _discrete_boundary(field: Field1D, problem, dens, phi, k, richardson=False, fine=True):
    t_lo, t_hi, _, _ = phi.support()
    a, b = problem.domain
    steps, ta, tb = _overlap(field.times, max(t_lo, 0.0), min(t_hi, field.horizon))
    total = np.zeros(k.size)
    if steps.size == 0:
        return total
    order = 4 if fine else 1
    tn, tw = _gl_nodes(ta, tb, order)
    for side, xi, nu in (("left", a, -1.0), ("right", b, 1.0)):
        weight = float(phi.bx(xi))
        if weight == 0.0:
            continue
        tr = None
        if dens.uses_trace:
            log = field.trace_left if side == "left" else field.trace_right
            if log.size == 0:
                raise ValueError("field carries no trace log")
            tr = 1.5 * log[:, 0] - 0.5 * log[:, 1] if richardson else log[:, 0]
            tr = tr[steps][:, None, None] + 0.0 * tn[:, :, None]
        ub = problem.datum(side, tn)[:, :, None]
        if tr is None:
            tr = ub
        vals = dens.bnd(tn[:, :, None], xi, nu, ub, tr, k[None, None, :])
        total += weight * np.sum(vals * (phi.bt(tn) * tw)[:, :, None], axis=(0, 1))
    return total


def _level_roots(fun, lo, hi, levels, scan=65, iters=60):
    """Points in ``(lo, hi)`` where ``fun(s) = level`` for each level, found by
    sign changes on a uniform scan and bisection.  Returns ``(len(levels), R)``
    padded with NaN."""
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    s = np.linspace(lo, hi, scan)
    v = fun(s)[None, :] - levels[:, None]
    exact = v == 0.0
    change = (np.sign(v[:, :-1]) * np.sign(v[:, 1:]) < 0)
    rows, cols = np.nonzero(change)
    left, right = s[cols].copy(), s[cols + 1].copy()
    lev = levels[rows]
    fl = v[rows, cols]
    for _ in range(iters):
        mid = 0.5 * (left + right)
        fm = fun(mid) - lev
        same = np.sign(fm) == np.sign(fl)
        left = np.where(same, mid, left)
        fl = np.where(same, fm, fl)
        right = np.where(same, right, mid)
    roots = [[] for _ in range(levels.size)]
    for r, c in zip(rows, 0.5 * (left + right)):
        roots[r].append(c)
    for r, c in zip(*np.nonzero(exact)):
        roots[r].append(s[c])
    width = max(1, max(len(r) for r in roots))
    out = np.full((levels.size, width), np.nan)
    for i, r in enumerate(roots):
        out[i, :len(r)] = r
    return out


def _smooth_interior(cand: SmoothSolution, problem, dens, phi, k, eps):
    t_lo, t_hi, x_lo, x_hi = phi.support()
    a, b = problem.domain
    ta, tb = max(t_lo, 0.0), min(t_hi, problem.horizon)
    xa, xb = max(x_lo, a), min(x_hi, b)
    if not (tb > ta and xb > xa):
        return np.zeros(k.size), np.zeros(k.size)

    def outer(tnodes, owner):
        tp = tnodes.ravel()
        kp = np.repeat(k[owner], tnodes.shape[1])
        bt, dbt = phi.bt(tp), phi.dbt(tp)
        bp = np.concatenate([_x_roots(cand, tp, kp, xa, xb), np.full((tp.size, 1), phi.x0)], axis=1)

        def inner(xn, own):
            t = tp[own][:, None]
            kk = kp[own][:, None]
            u = cand(t, xn)
            val = dens.A(t, xn, u, kk) * dbt[own][:, None] * phi.bx(xn)
            val = val + dens.B(t, xn, u, kk) * bt[own][:, None] * phi.dbx(xn)
            if dens.C is not None:
                val = val + dens.C(t, xn, u, kk) * bt[own][:, None] * phi.bx(xn)
            return val

        v, _ = integrate(inner, np.full(tp.size, xa), np.full(tp.size, xb), breakpoints=bp,
                         epsabs=0.1 * eps, epsrel=1e-12)
        return v.reshape(tnodes.shape)

    # the inner integral has kinks in t where a level set u = k crosses the x-limits
    bp_t = np.concatenate([np.full((k.size, 1), phi.t0),
                           _level_roots(lambda t: cand(t, xa), ta, tb, k),
                           _level_roots(lambda t: cand(t, xb), ta, tb, k)], axis=1)
    return integrate(outer, np.full(k.size, ta), np.full(k.size, tb), breakpoints=bp_t,
                     epsabs=eps, epsrel=1e-12)


def _x_roots(cand, tp, kp, xa, xb, scan=33, iters=55):
    """Per row: points in (xa, xb) where ``u(t_row, x) = k_row``."""
    s = np.linspace(xa, xb, scan)
    v = cand(tp[:, None], s[None, :]) - kp[:, None]
    change = np.sign(v[:, :-1]) * np.sign(v[:, 1:]) < 0
    rows, cols = np.nonzero(change)
    if rows.size == 0:
        return np.full((tp.size, 1), np.nan)
    left, right = s[cols].copy(), s[cols + 1].copy()
    tr, kr = tp[rows], kp[rows]
    fl = v[rows, cols]
    for _ in range(iters):
        mid = 0.5 * (left + right)
        fm = cand(tr, mid) - kr
        same = np.sign(fm) == np.sign(fl)
        left = np.where(same, mid, left)
        fl = np.where(same, fm, fl)
        right = np.where(same, right, mid)
    slot = np.zeros(rows.size, dtype=int)
    counts = np.zeros(tp.size, dtype=int)
    for i, r in enumerate(rows):
        slot[i] = counts[r]
        counts[r] += 1
    out = np.full((tp.size, counts.max()), np.nan)
    out[rows, slot] = 0.5 * (left + right)
    return out


def _smooth_boundary(cand, problem, dens, phi, k, eps):
    t_lo, t_hi, _, _ = phi.support()
    a, b = problem.domain
    ta, tb = max(t_lo, 0.0), min(t_hi, problem.horizon)
    total = np.zeros(k.size)
    err = np.zeros(k.size)
    for side, xi, nu in (("left", a, -1.0), ("right", b, 1.0)):
        weight = float(phi.bx(xi))
        if weight == 0.0 or not tb > ta:
            continue

        def trace(t, xi=xi):
            return cand(t, xi)

        def datum(t, side=side):
            return problem.datum(side, t)

        bp = [np.full((k.size, 1), phi.t0)]
        if problem.ub_breaks:
            bp.append(np.broadcast_to(np.asarray(problem.ub_breaks, dtype=float), (k.size, len(problem.ub_breaks))))
        bp.append(_level_roots(datum, ta, tb, k))
        bp.append(_level_roots(trace, ta, tb, k))

        def integrand(tn, owner, xi=xi, nu=nu, trace=trace, datum=datum):
            kk = k[owner][:, None]
            return dens.bnd(tn, xi, nu, datum(tn), trace(tn), kk) * phi.bt(tn)

        v, e = integrate(integrand, np.full(k.size, ta), np.full(k.size, tb),
                         breakpoints=np.concatenate(bp, axis=1), epsabs=eps, epsrel=1e-12)
        total += weight * v
        err += weight * e
    return total, err


def _initial_term(problem, dens, phi, k, eps):
    t_lo, t_hi, x_lo, x_hi = phi.support()
    w = float(phi.bt(0.0))
    if w == 0.0:
        return np.zeros(k.size), np.zeros(k.size)
    a, b = problem.domain
    xa, xb = max(x_lo, a), min(x_hi, b)
    if not xb > xa:
        return np.zeros(k.size), np.zeros(k.size)

    def u0(x):
        return np.asarray(problem.u0(x), dtype=float) + 0.0 * x

    bp = [np.full((k.size, 1), phi.x0), _level_roots(u0, xa, xb, k)]
    if problem.u0_breaks:
        bp.append(np.broadcast_to(np.asarray(problem.u0_breaks, dtype=float), (k.size, len(problem.u0_breaks))))

    def integrand(xn, owner):
        return dens.A(0.0, xn, u0(xn), k[owner][:, None]) * phi.bx(xn)

    v, e = integrate(integrand, np.full(k.size, xa), np.full(k.size, xb),
                     breakpoints=np.concatenate(bp, axis=1), epsabs=eps, epsrel=1e-12)
    return w * v, w * e


def _terminal_term(cand, problem, dens, phi, k, eps):
    T = problem.horizon
    w = float(phi.bt(T))
    a, b = problem.domain
    _, _, x_lo, x_hi = phi.support()
    if w == 0.0:
        return np.zeros(k.size), np.zeros(k.size)
    if isinstance(cand, Field1D):
        cells, xa, xb = _overlap(cand.grid.edges, x_lo, x_hi)
        u = cand.values[-1][cells][:, None]
        vals = dens.A(T, 0.5 * (xa + xb)[:, None], u, k[None, :])
        return -w * (phi.int_bx(xa, xb) @ vals), np.zeros(k.size)
    xa, xb = max(x_lo, a), min(x_hi, b)

    def integrand(xn, owner):
        return dens.A(T, xn, cand(T, xn), k[owner][:, None]) * phi.bx(xn)

    bp = np.concatenate([np.full((k.size, 1), phi.x0),
                         _level_roots(lambda x: cand(T, x), xa, xb, k)], axis=1)
    v, e = integrate(integrand, np.full(k.size, xa), np.full(k.size, xb), breakpoints=bp,
                     epsabs=eps, epsrel=1e-12)
    return -w * v, w * e


def _evaluate(cand, problem: IBVPProblem, dens: _Density, phi: TestFunction, k, *, tol, slack,
              terminal=False, richardson=False, eps=1e-12):
    _check_support(phi, problem, terminal)
    scalar = np.ndim(k) == 0
    k = np.atleast_1d(np.asarray(k, dtype=float)).ravel()
    if isinstance(cand, Field1D):
        if abs(cand.horizon - problem.horizon) > 1e-12 * max(1.0, problem.horizon):
            raise ValueError("field horizon differs from the problem horizon")
        if tuple(cand.grid.domain) != tuple(problem.domain):
            raise ValueError("field domain differs from the problem domain")
        interior = _discrete_interior(cand, dens, phi, k)
        coarse = _discrete_interior(cand, dens, phi, k, fine=False)
        bnd = _discrete_boundary(cand, problem, dens, phi, k, richardson)
        bnd_coarse = _discrete_boundary(cand, problem, dens, phi, k, richardson, fine=False)
        err = np.abs(interior - coarse) + np.abs(bnd - bnd_coarse)
        threshold = tol + slack * cand.dx
    elif isinstance(cand, SmoothSolution):
        interior, e1 = _smooth_interior(cand, problem, dens, phi, k, eps)
        bnd, e2 = _smooth_boundary(cand, problem, dens, phi, k, eps)
        err = e1 + e2
        threshold = tol
    else:
        raise TypeError(f"unsupported candidate type {type(cand).__name__}")
    init, e3 = _initial_term(problem, dens, phi, k, eps)
    term = np.zeros(k.size)
    if terminal:
        term, e4 = _terminal_term(cand, problem, dens, phi, k, eps)
        err = err + e4
    err = err + e3
    lhs = interior + init + bnd + term
    reports = []
    for i in range(k.size):
        terms = {"interior": float(interior[i]), "initial": float(init[i]), "boundary": float(bnd[i])}
        if terminal:
            terms["terminal"] = float(term[i])
        reports.append(ResidualReport(
            definition_id=dens.definition, entropy=dens.entropy, k=float(k[i]), testfn=phi.label,
            lhs_value=float(lhs[i]), quadrature_error_estimate=float(err[i]),
            tolerance=float(threshold), verdict="pass" if lhs[i] >= -threshold else "fail",
            terms=terms))
    return reports[0] if scalar else reports


def residual_mv(field, problem: IBVPProblem, k, sign, phi: TestFunction, L, *, tol=BASE_TOL,
                slack=0.0):
    """Semi-entropy inequality with boundary weight ``L (u_b - k)^+-`` at both ends."""
    return _evaluate(field, problem, _mv_density(problem.flux, sign, L), phi, k, tol=tol, slack=slack)


def residual_re(field, problem: IBVPProblem, pair: BoundaryEntropyPair, k, phi: TestFunction, L, *,
                terminal=False, tol=BASE_TOL, slack=0.0):
    """Inequality built on a boundary entropy pair ``(H, Q)`` with second
    argument ``k``.  ``terminal=True`` admits test functions alive at ``t = T``
    and adds ``-int H(u(T, x), k) phi(T, x) dx``."""
    return _evaluate(field, problem, _re_density(problem.flux, pair, L), phi, k, tol=tol,
                     slack=slack, terminal=terminal)


def residual_bln(field, problem: IBVPProblem, k, phi: TestFunction, *, tol=BASE_TOL, slack=0.0,
                 richardson=False):
    """Kruzhkov inequality with the trace entering the boundary term."""
    return _evaluate(field, problem, _bln_density(problem.flux), phi, k, tol=tol, slack=slack,
                     richardson=richardson)


def residual_e(field, problem: IBVPProblem, pair: EntropyPair, phi: TestFunction, *, tol=BASE_TOL,
               slack=0.0, richardson=False):
    """Inequality for one entropy pair (the pair carries its own ``k``)."""
    if pair.k is not None and np.ndim(pair.k) > 0:
        raise ValueError("residual_e takes a pair with a scalar k")
    # k only locates kinks here; the densities ignore it
    k = float(pair.k) if pair.k is not None else float("nan")
    return _evaluate(field, problem, _e_density(problem.flux, pair), phi, k, tol=tol, slack=slack,
                     richardson=richardson)


# --- sweeps and export --------------------------------------------------------

def residual_sweep(definition, field, problem, k_grid, bumps, *, L=None, pair=None, pairs=None,
                   tol=BASE_TOL, slack=0.0):
    """Reports for every ``(k, phi)`` (and pair, for RE/E).

    ``definition`` is one of ``RE``, ``MV+``, ``MV-``, ``MV`` (both signs),
    ``E`` or ``BLN``.  For ``E`` pass ``pairs`` (one per state) or a factory
    ``pair(k)``.
    """
    bumps = list(bumps)
    if not bumps:
        raise ValueError("empty sweep: no test function fits the field's extent")
    k_grid = np.atleast_1d(np.asarray(k_grid, dtype=float))
    out = []
    for phi in bumps:
        if definition in ("MV", "MV+", "MV-"):
            for s in (("+", "-") if definition == "MV" else (definition[2],)):
                out += residual_mv(field, problem, k_grid, s, phi, L, tol=tol, slack=slack)
        elif definition == "BLN":
            out += residual_bln(field, problem, k_grid, phi, tol=tol, slack=slack)
        elif definition == "RE":
            for p in (pairs if pairs is not None else [pair]):
                out += residual_re(field, problem, p, k_grid, phi, L, tol=tol, slack=slack)
        elif definition == "E":
            plist = pairs if pairs is not None else [pair(k) for k in k_grid]
            out += [residual_e(field, problem, p, phi, tol=tol, slack=slack) for p in plist]
        else:
            raise ValueError(f"unknown definition {definition!r}")
    return out


def min_lhs(reports):
    return min(r.lhs_value for r in reports)


_FIELDS = ("definition_id", "entropy", "k", "testfn", "lhs_value", "quadrature_error_estimate",
           "tolerance", "verdict")


def reports_to_csv(reports):
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(_FIELDS)
    for r in reports:
        w.writerow([repr(getattr(r, f)) if isinstance(getattr(r, f), float) else getattr(r, f)
                    for f in _FIELDS])
    return buf.getvalue()


def reports_to_json(reports):
    return json.dumps([r.as_dict() for r in reports], sort_keys=True, indent=1)


def residual_surface(reports):
    """CSV of ``k`` rows by test-function columns holding the minimum lhs over
    everything else (entropy, sign)."""
    ks = sorted({r.k for r in reports})
    fns = list(dict.fromkeys(r.testfn for r in reports))
    table = {}
    for r in reports:
        key = (r.k, r.testfn)
        table[key] = min(table.get(key, np.inf), r.lhs_value)
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["k"] + fns)
    for k in ks:
        w.writerow([repr(k)] + [repr(table.get((k, f), float("nan"))) for f in fns])
    return buf.getvalue()


# --- boundary limits ----------------------------------------------------------

@dataclass
class LimitReport:
    offsets: list
    values: list
    extrapolated: float
    tolerance: float
    passed: bool
    label: str = ""


def boundary_limit_check(field: Field1D, problem: IBVPProblem, pair_or_F, beta=None, *,
                         sides=("left", "right"), tol=BASE_TOL):
    """``sum_xi int Q(t, xi, u(t, xi - rho nu), u_b) nu beta dt`` at each logged
    offset ``rho`` and the linear extrapolation to ``rho = 0``.

    ``pair_or_F`` is a :class:`BoundaryEntropyPair` or a tuple
    ``("F", k)`` / ``("F", k, form)`` selecting the flux-comparison function.
    """
    flux = problem.flux
    if field.trace_left.shape[1] < 2:
        raise ValueError("at least two trace offsets are required")
    if isinstance(pair_or_F, BoundaryEntropyPair):
        def Q(t, xi, z, w):
            return pair_or_F.Q(t, xi, z, w)
        label = pair_or_F.name
    else:
        _, k, *form = pair_or_F
        form = form[0] if form else "piecewise"

        def Q(t, xi, z, w):
            return flux_comparison(flux, t, xi, z, w, k, form)
        label = f"F[k={k}]"
    beta = (lambda t, xi: 1.0) if beta is None else beta
    a, b = problem.domain
    tn, tw = _gl_nodes(field.times[:-1], field.times[1:], 4)
    values = []
    for j in range(2):
        total = 0.0
        for side in sides:
            xi, nu = (a, -1.0) if side == "left" else (b, 1.0)
            log = field.trace_left if side == "left" else field.trace_right
            z = log[:-1, j][:, None] + 0.0 * tn
            ub = problem.datum(side, tn)
            total += float(np.sum(Q(tn, xi, z, ub) * nu * beta(tn, xi) * tw))
        values.append(total)
    extrap = 1.5 * values[0] - 0.5 * values[1]
    return LimitReport(offsets=[float(o) for o in field.offsets[:2]], values=values,
                       extrapolated=float(extrap), tolerance=tol, passed=bool(extrap >= -tol),
                       label=label)


# --- strong solutions ---------------------------------------------------------

@dataclass
class StrongReport:
    pde_residual: float
    initial_error: float
    boundary: dict
    re_min_lhs: Optional[float]
    re_checked: int
    tolerance: float
    passed: bool
    failures: list = field(default_factory=list)


def verify_strong(candidate: SmoothSolution, problem: IBVPProblem, *, tol=1e-8, samples=33,
                  k_points=K_POINTS, pair_n=(10,), bumps: Optional[Sequence] = None,
                  run_re=True):
    """Pointwise check of a classical solution, then (if it passes) the RE
    inequality on the same candidate over a k grid and the catalog bumps."""
    if candidate.du_dt is None or candidate.du_dx is None:
        raise ValueError("verify_strong needs closed-form du_dt and du_dx")
    flux = problem.flux
    a, b = problem.domain
    T = problem.horizon
    t = np.linspace(0.0, T, samples)[:, None]
    x = np.linspace(a, b, samples)[None, :]
    u = candidate(t, x)
    ut = np.asarray(candidate.du_dt(t, x), dtype=float)
    ux = np.asarray(candidate.du_dx(t, x), dtype=float)
    res = ut + flux.df_du(t, x, u) * ux + _div(flux, t, x, u) - _src(flux, t, x, u)
    pde = float(np.max(np.abs(res)))
    xs = x.ravel()
    init = float(np.max(np.abs(candidate(0.0, xs) - (np.asarray(problem.u0(xs), dtype=float) + 0 * xs))))
    failures = []
    if not pde <= tol:
        failures.append(f"pde residual {pde:.3e}")
    if not init <= tol:
        failures.append(f"initial mismatch {init:.3e}")
    boundary = {}
    ts = t.ravel()
    for side, xi, nu in (("left", a, -1.0), ("right", b, 1.0)):
        res = evaluate_batch(flux, ts, np.full(ts.shape, xi), np.full(ts.shape, nu),
                             candidate(ts, xi), problem.datum(side, ts),
                             conditions=("strong-bc",))["strong-bc"]
        ok = res.admissible
        boundary[side] = "admissible" if ok.all() else "violated"
        if not ok.all():
            j = int(np.argmin(res.worst_value + res.tolerance))
            failures.append(f"boundary condition at {side} (t={ts[j]:.4g}, k={res.worst_k[j]:.6g})")
    re_min, checked = None, 0
    if run_re and not failures:
        lo, hi = float(u.min()), float(u.max())
        dlo, dhi = problem.data_bound()
        U = max(abs(lo), abs(hi), abs(dlo), abs(dhi))
        ks = definition_k_grid(U, k_points)
        L = lipschitz_norm(flux, T, (a, b), U + 1.0)
        fam = catalog_bumps(problem) if bumps is None else bumps
        reps = []
        for n in pair_n:
            for s in ("+", "-"):
                pair = smoothed_semi_pair(flux, s, n)
                for phi in fam:
                    reps += residual_re(candidate, problem, pair, ks, phi, L, tol=tol)
        checked = len(reps)
        re_min = min_lhs(reps)
        bad = [r for r in reps if not r.passed]
        if bad:
            worst = min(bad, key=lambda r: r.lhs_value)
            failures.append(f"RE residual {worst.lhs_value:.3e} ({worst.entropy}, k={worst.k:.4g}, "
                            f"{worst.testfn})")
    return StrongReport(pde_residual=pde, initial_error=init, boundary=boundary, re_min_lhs=re_min,
                        re_checked=checked, tolerance=tol, passed=not failures, failures=failures)
