"""Pointwise boundary admissibility: the flux-comparison function, six
equivalent conditions on a (trace, datum) pair, and a brute-force sweep that
checks their verdicts agree.
"""
from __future__ import annotations

import csv
import io
import json
import multiprocessing
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import entropy as ent
from .flux import FluxModel, extremum_on_interval

FORMS = ("piecewise", "sign-average", "semi-sign")
CONDITIONS = ("bln", "sign-form", "flux-comparison", "dubois-lefloch", "zero-entropy")
DEFAULT_K_GRID = 257
OUTSIDE_POINTS = 32
SMALL_FAMILY = 9
BASE_TOL = 1e-9


@dataclass(frozen=True)
class BoundarySample:
    t: float
    xi: object
    nu: object
    trace_u: float
    datum_ub: float

    def __post_init__(self):
        nu = np.atleast_1d(np.asarray(self.nu, dtype=float))
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        vals = [self.t, self.trace_u, self.datum_ub]
        if not (np.all(np.isfinite(nu)) and np.all(np.isfinite(xi)) and np.all(np.isfinite(vals))):
            raise ValueError("boundary sample fields must be finite")
        if abs(float(np.linalg.norm(nu)) - 1.0) > 1e-12:
            raise ValueError(f"normal must have unit length, got |nu| = {np.linalg.norm(nu)!r}")
        if nu.size != xi.size:
            raise ValueError("xi and nu must have the same dimension")

    def arrays(self, flux):
        """``(t, xi, nu, trace, datum)`` as batch-of-one arrays."""
        if flux.space_dim == 1:
            xi = np.array([float(np.ravel(self.xi)[0])])
            nu = np.array([float(np.ravel(self.nu)[0])])
        else:
            xi = np.asarray(self.xi, dtype=float).reshape(1, -1)
            nu = np.asarray(self.nu, dtype=float).reshape(1, -1)
        return (np.array([float(self.t)]), xi, nu,
                np.array([float(self.trace_u)]), np.array([float(self.datum_ub)]))


@dataclass
class AdmissibilityReport:
    verdict: str
    worst_k: Optional[float]
    worst_value: float
    condition_id: str
    k_grid_size: int
    tolerance: float
    member: Optional[str] = None

    @property
    def admissible(self):
        return self.verdict == "admissible"

    def as_dict(self):
        return asdict(self)


# --- flux comparison ----------------------------------------------------------

def _dot(flux, vals, nu):
    vals = np.asarray(vals, dtype=float)
    if flux.space_dim == 1:
        return vals * nu
    return np.sum(vals * nu, axis=-1)


def _scalar_mask(flux, m):
    return m if flux.space_dim == 1 else m[..., None]


def flux_comparison(flux: FluxModel, t, x, z, w, k, form="piecewise"):
    """Flux-comparison function of ``(z, w, k)``; vector valued when N > 1.

    ``piecewise`` follows the six-case table, ``sign-average`` the half-sum of
    three Kruzhkov-type terms and ``semi-sign`` the one-sided signs against
    ``max(w, k)`` and ``min(w, k)``.
    """
    z, w, k = (np.asarray(v, dtype=float) for v in (z, w, k))
    fz = np.asarray(flux.f(t, x, z), dtype=float)
    fw = np.asarray(flux.f(t, x, w), dtype=float)
    fk = np.asarray(flux.f(t, x, k), dtype=float)
    e = lambda s: _scalar_mask(flux, np.asarray(s))
    if form == "piecewise":
        z, w, k = np.broadcast_arrays(z, w, k)
        conds = [(w <= z) & (z <= k), (k <= z) & (z <= w),
                 (z <= w) & (w <= k), (w <= k) & (k <= z),
                 (z <= k) & (k <= w), (k <= w) & (w <= z)]
        choices = [0.0 * fz, 0.0 * fz, fw - fz, fz - fk, fk - fz, fz - fw]
        return np.select([e(c) for c in conds], [np.broadcast_to(c, np.broadcast(fz, fw, fk).shape)
                                                  for c in choices])
    if form == "sign-average":
        return 0.5 * (e(ent.sgn(z - w)) * (fz - fw) - e(ent.sgn(k - w)) * (fk - fw)
                      + e(ent.sgn(z - k)) * (fz - fk))
    if form == "semi-sign":
        hi = np.maximum(w, k)
        lo = np.minimum(w, k)
        return (e(ent.sgn_plus(z - hi)) * (fz - np.asarray(flux.f(t, x, hi), dtype=float))
                + e(ent.sgn_minus(z - lo)) * (fz - np.asarray(flux.f(t, x, lo), dtype=float)))
    raise ValueError(f"unknown form {form!r}; expected one of {FORMS}")


# --- k grids ------------------------------------------------------------------

def hull_grid(flux, t, xi, nu, trace, datum, k_grid=DEFAULT_K_GRID, critical=True):
    """Uniform grid on ``I[trace, datum]`` (end points included), optionally
    augmented by the extremal points of ``f . nu`` on the hull.

    Shapes: ``t, trace, datum`` are ``(S,)``; the result is ``(S, K)``.
    """
    if k_grid < 2:
        raise ValueError("k_grid must be >= 2")
    lo = np.minimum(trace, datum)
    hi = np.maximum(trace, datum)
    grid = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, k_grid)
    grid[:, -1] = hi
    if not critical:
        return grid
    g = _normal_flux_fun(flux, t, xi, nu)
    _, kmax = extremum_on_interval(g, lo, hi, maximize=True)
    _, kmin = extremum_on_interval(g, lo, hi, maximize=False)
    return np.concatenate([grid, kmax[:, None], kmin[:, None]], axis=1)


def outside_grid(trace, datum, count=OUTSIDE_POINTS):
    """``count`` points strictly outside the hull, half on each side."""
    lo = np.minimum(trace, datum)
    hi = np.maximum(trace, datum)
    span = np.maximum(hi - lo, 1.0)
    j = np.arange(1, count // 2 + 1) / (count // 2)
    return np.concatenate([lo[:, None] - span[:, None] * j, hi[:, None] + span[:, None] * j], axis=1)


def _normal_flux_fun(flux, t, xi, nu):
    """``(u, rows) -> f(t_r, xi_r, u) . nu_r`` for :func:`extremum_on_interval`."""
    def g(u, rows):
        if flux.space_dim == 1:
            return np.asarray(flux.f(t[rows][:, None], xi[rows][:, None], u), dtype=float) * nu[rows][:, None]
        vals = np.asarray(flux.f(t[rows][:, None], xi[rows][:, None, :], u), dtype=float)
        return np.sum(vals * nu[rows][:, None, :], axis=-1)
    return g


def _col(flux, a):
    """Add the k axis to per-sample arrays (``x``/``nu`` keep their component axis)."""
    a = np.asarray(a)
    if flux.space_dim == 1 or a.ndim == 1:
        return a[:, None]
    return a[:, None, :]


def _tolerance(flux, t, xi, trace, datum, base=BASE_TOL):
    ft = np.asarray(flux.f(t, xi, trace), dtype=float)
    fb = np.asarray(flux.f(t, xi, datum), dtype=float)
    if flux.space_dim > 1:
        ft = np.linalg.norm(ft, axis=-1)
        fb = np.linalg.norm(fb, axis=-1)
    return base * (1.0 + np.maximum(np.abs(ft), np.abs(fb)))


# --- batched condition values -------------------------------------------------
# each returns an (S, K) array of left-hand sides; the verdict is their min.

def values_bln(flux, t, xi, nu, trace, datum, kg):
    tc, xc, nc = _col(flux, t), _col(flux, xi), _col(flux, nu)
    ft = np.asarray(flux.f(tc, xc, trace[:, None]), dtype=float)
    fk = np.asarray(flux.f(tc, xc, kg), dtype=float)
    return ent.sgn(trace - datum)[:, None] * _dot(flux, ft - fk, nc)


def values_sign_form(flux, t, xi, nu, trace, datum, kg):
    tc, xc, nc = _col(flux, t), _col(flux, xi), _col(flux, nu)
    ft = np.asarray(flux.f(tc, xc, trace[:, None]), dtype=float)
    fk = np.asarray(flux.f(tc, xc, kg), dtype=float)
    jump = ent.sgn(trace[:, None] - kg) - ent.sgn(datum[:, None] - kg)
    return jump * _dot(flux, ft - fk, nc)


def values_flux_comparison(flux, t, xi, nu, trace, datum, kg, form="piecewise"):
    tc, xc, nc = _col(flux, t), _col(flux, xi), _col(flux, nu)
    F = flux_comparison(flux, tc, xc, trace[:, None], datum[:, None], kg, form=form)
    return _dot(flux, F, nc)


def _member_columns(lhs, pair, key, S):
    lhs = np.asarray(lhs, dtype=float)
    lhs = np.broadcast_to(lhs, (S, lhs.shape[-1] if lhs.ndim == 2 else 1))
    kk = pair.k if key == "k" else pair.params.get("k")
    kk = np.full(lhs.shape, np.nan) if kk is None else np.broadcast_to(np.asarray(kk, dtype=float), lhs.shape)
    return lhs, kk, [pair.name] * lhs.shape[1]


def values_dubois_lefloch(flux, t, xi, nu, trace, datum, pairs):
    """One column per (pair, k); pairs may carry per-sample ``k`` columns.
    Returns ``(values, k_of_column, member_names)``."""
    tc, xc, nc = _col(flux, t), _col(flux, xi), _col(flux, nu)
    tr, ub = trace[:, None], datum[:, None]
    ft = np.asarray(flux.f(tc, xc, tr), dtype=float)
    fb = np.asarray(flux.f(tc, xc, ub), dtype=float)
    vals, ks, labels = [], [], []
    for pair in pairs:
        qt = np.asarray(pair.q(tc, xc, tr), dtype=float)
        qb = np.asarray(pair.q(tc, xc, ub), dtype=float)
        slope = np.asarray(pair.eta_prime(ub), dtype=float)
        lhs = _dot(flux, qt - qb - ent._expand(flux, slope) * (ft - fb), nc)
        v, k, lab = _member_columns(lhs, pair, "k", trace.size)
        vals.append(v)
        ks.append(k)
        labels += lab
    return np.concatenate(vals, axis=1), np.concatenate(ks, axis=1), labels


def values_zero_entropy(flux, t, xi, nu, trace, datum, pairs):
    """``Q(t, xi, trace, datum) . nu`` for boundary pairs vanishing at the datum."""
    tc, xc, nc = _col(flux, t), _col(flux, xi), _col(flux, nu)
    tr, ub = trace[:, None], datum[:, None]
    vals, ks, labels = [], [], []
    for pair in pairs:
        lhs = _dot(flux, pair.Q(tc, xc, tr, ub), nc)
        v, k, lab = _member_columns(lhs, pair, "params", trace.size)
        vals.append(v)
        ks.append(k)
        labels += lab
    return np.concatenate(vals, axis=1), np.concatenate(ks, axis=1), labels


def small_k_family(trace, datum, count=SMALL_FAMILY):
    lo = np.minimum(trace, datum)
    hi = np.maximum(trace, datum)
    return lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, count)


def default_entropy_family(flux, trace, datum, kg):
    """Kruzhkov pairs on the full grid (closed form), quadratics and the smooth
    absolute values at ``n = 10, 100`` on a coarse grid."""
    ks = small_k_family(trace, datum)
    return [ent.kruzkov_pair(flux, kg), ent.quadratic_pair(flux, ks),
            ent.smooth_abs_family(flux, ks, 10), ent.smooth_abs_family(flux, ks, 100)]


def default_zero_family(flux, trace, datum, kg):
    """Distance-to-hull pairs anchored at the datum: the Lipschitz limit on the
    full grid and the smoothed members ``n = 10, 100`` on a coarse grid."""
    ks = small_k_family(trace, datum)
    return [ent.distance_pair_family(flux, kg, None), ent.distance_pair_family(flux, ks, 10),
            ent.distance_pair_family(flux, ks, 100)]


@dataclass
class BatchResult:
    worst_value: np.ndarray
    worst_k: np.ndarray
    tolerance: np.ndarray
    member: Optional[list] = None

    @property
    def admissible(self):
        return self.worst_value >= -self.tolerance


def _reduce(vals, kg, tol, labels=None):
    i = np.argmin(vals, axis=1)
    rows = np.arange(vals.shape[0])
    worst = vals[rows, i]
    kk = np.broadcast_to(kg, vals.shape)[rows, i] if kg is not None else np.full(vals.shape[0], np.nan)
    member = [labels[j] for j in i] if labels is not None else None
    return BatchResult(worst, kk, tol, member)


def evaluate_batch(flux, t, xi, nu, trace, datum, k_grid=DEFAULT_K_GRID, conditions=CONDITIONS,
                   base_tol=BASE_TOL, fault=None):
    """All requested conditions on a batch of samples.  ``fault`` names one
    condition whose values get their sign flipped (test hook)."""
    t = np.asarray(t, dtype=float)
    trace = np.asarray(trace, dtype=float)
    datum = np.asarray(datum, dtype=float)
    xi = np.asarray(xi, dtype=float)
    nu = np.asarray(nu, dtype=float)
    tol = _tolerance(flux, t, xi, trace, datum, base_tol)
    hull = hull_grid(flux, t, xi, nu, trace, datum, k_grid)
    wide = np.concatenate([hull, outside_grid(trace, datum)], axis=1)
    out = {}
    for cond in conditions:
        if cond == "bln":
            vals, kg, labels = values_bln(flux, t, xi, nu, trace, datum, hull), hull, None
        elif cond == "strong-bc":
            vals, kg, labels = values_bln(flux, t, xi, nu, trace, datum, hull), hull, None
        elif cond == "sign-form":
            vals, kg, labels = values_sign_form(flux, t, xi, nu, trace, datum, wide), wide, None
        elif cond == "flux-comparison":
            vals, kg, labels = values_flux_comparison(flux, t, xi, nu, trace, datum, wide), wide, None
        elif cond == "dubois-lefloch":
            fam = default_entropy_family(flux, trace, datum, hull)
            vals, kg, labels = values_dubois_lefloch(flux, t, xi, nu, trace, datum, fam)
        elif cond == "zero-entropy":
            fam = default_zero_family(flux, trace, datum, wide)
            vals, kg, labels = values_zero_entropy(flux, t, xi, nu, trace, datum, fam)
        else:
            raise ValueError(f"unknown condition {cond!r}")
        if fault == cond:
            vals = -vals
        out[cond] = _reduce(vals, kg, tol, labels)
    return out


# --- single-sample checkers ---------------------------------------------------

def _report(res, cond, size):
    ok = bool(res.admissible[0])
    wk = float(res.worst_k[0])
    return AdmissibilityReport("admissible" if ok else "violated",
                               None if np.isnan(wk) else wk, float(res.worst_value[0]), cond,
                               size, float(res.tolerance[0]),
                               res.member[0] if res.member else None)


def _grid_with(kg_lo, kg_hi, k_grid, trace, datum):
    lo = min(trace, datum)
    hi = max(trace, datum)
    if kg_lo is not None and kg_lo > lo + 1e-15:
        raise ValueError("k_lo must not exceed min(trace, datum)")
    if kg_hi is not None and kg_hi < hi - 1e-15:
        raise ValueError("k_hi must not be below max(trace, datum)")


def check_bln(sample: BoundarySample, flux: FluxModel, k_grid=DEFAULT_K_GRID, tol=BASE_TOL):
    a = sample.arrays(flux)
    hull = hull_grid(flux, *a, k_grid)
    res = _reduce(values_bln(flux, *a, hull), hull, _tolerance(flux, a[0], a[1], a[3], a[4], tol))
    return _report(res, "bln", hull.shape[1])


def check_strong_bc(sample: BoundarySample, flux: FluxModel, k_grid=DEFAULT_K_GRID, tol=BASE_TOL):
    """Same arithmetic as :func:`check_bln` with ``trace_u`` read as the
    solution's boundary value."""
    rep = check_bln(sample, flux, k_grid, tol)
    rep.condition_id = "strong-bc"
    return rep


def _scan_grid(flux, a, k_lo, k_hi, k_grid):
    _grid_with(k_lo, k_hi, k_grid, float(a[3][0]), float(a[4][0]))
    hull = hull_grid(flux, *a, k_grid)
    extra = [outside_grid(a[3], a[4])]
    if k_lo is not None and k_hi is not None:
        extra.append(np.linspace(k_lo, k_hi, k_grid)[None, :])
    return np.concatenate([hull] + extra, axis=1)


def check_sign_form(sample, flux, k_lo=None, k_hi=None, k_grid=DEFAULT_K_GRID, tol=BASE_TOL):
    a = sample.arrays(flux)
    kg = _scan_grid(flux, a, k_lo, k_hi, k_grid)
    res = _reduce(values_sign_form(flux, *a, kg), kg, _tolerance(flux, a[0], a[1], a[3], a[4], tol))
    return _report(res, "sign-form", kg.shape[1])


def check_flux_comparison(sample, flux, k_lo=None, k_hi=None, k_grid=DEFAULT_K_GRID, tol=BASE_TOL,
                          form="piecewise"):
    a = sample.arrays(flux)
    kg = _scan_grid(flux, a, k_lo, k_hi, k_grid)
    res = _reduce(values_flux_comparison(flux, *a, kg, form=form), kg,
                  _tolerance(flux, a[0], a[1], a[3], a[4], tol))
    return _report(res, "flux-comparison", kg.shape[1])


def check_dubois_lefloch(sample, flux, pairs: Optional[Sequence] = None, k_grid=DEFAULT_K_GRID,
                         tol=BASE_TOL):
    """Entropy-pair boundary inequality for every pair in ``pairs`` (default:
    the Kruzhkov, quadratic and smoothed absolute-value families)."""
    a = sample.arrays(flux)
    if pairs is None:
        hull = hull_grid(flux, *a, k_grid)
        pairs = default_entropy_family(flux, a[3], a[4], hull)
    if not pairs:
        raise ValueError("pairs must be non-empty")
    vals, kg, labels = values_dubois_lefloch(flux, *a, pairs)
    res = _reduce(vals, kg, _tolerance(flux, a[0], a[1], a[3], a[4], tol), labels)
    return _report(res, "dubois-lefloch", vals.shape[1])


def check_zero_entropy(sample, flux, k_grid=DEFAULT_K_GRID, tol=BASE_TOL):
    """``Q(trace, datum) . nu`` over boundary pairs anchored at the datum."""
    a = sample.arrays(flux)
    hull = hull_grid(flux, *a, k_grid)
    kg = np.concatenate([hull, outside_grid(a[3], a[4])], axis=1)
    fam = default_zero_family(flux, a[3], a[4], kg)
    vals, kall, labels = values_zero_entropy(flux, *a, fam)
    res = _reduce(vals, kall, _tolerance(flux, a[0], a[1], a[3], a[4], tol), labels)
    return _report(res, "zero-entropy", vals.shape[1])


def check_all(sample, flux, k_grid=DEFAULT_K_GRID, tol=BASE_TOL):
    """Reports for the five pointwise conditions and the strong form."""
    return {
        "bln": check_bln(sample, flux, k_grid, tol),
        "sign-form": check_sign_form(sample, flux, k_grid=k_grid, tol=tol),
        "flux-comparison": check_flux_comparison(sample, flux, k_grid=k_grid, tol=tol),
        "dubois-lefloch": check_dubois_lefloch(sample, flux, k_grid=k_grid, tol=tol),
        "zero-entropy": check_zero_entropy(sample, flux, k_grid=k_grid, tol=tol),
        "strong-bc": check_strong_bc(sample, flux, k_grid, tol),
    }


# --- equivalence sweep --------------------------------------------------------

@dataclass
class SweepReport:
    flux: str
    seed: int
    samples: int
    k_grid: int
    U: float
    disagreements: list = field(default_factory=list)
    worst_margins: dict = field(default_factory=dict)
    admissible_counts: dict = field(default_factory=dict)
    rows: list = field(default_factory=list, repr=False)

    @property
    def ok(self):
        return not self.disagreements

    def to_json(self):
        body = {"flux": self.flux, "seed": self.seed, "samples": self.samples, "k_grid": self.k_grid,
                "U": self.U, "disagreements": self.disagreements, "worst_margins": self.worst_margins,
                "admissible_counts": self.admissible_counts}
        return json.dumps(body, indent=2, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        cols = ["index", "t", "xi", "nu", "trace", "datum"] + [f"{c}_verdict" for c in CONDITIONS] + \
               [f"{c}_worst" for c in CONDITIONS]
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(cols)
        for r in self.rows:
            w.writerow([r["index"], repr(r["t"]), _fmt(r["xi"]), _fmt(r["nu"]), repr(r["trace"]),
                        repr(r["datum"])] + [int(r["verdicts"][c]) for c in CONDITIONS] +
                       [repr(r["worst"][c]) for c in CONDITIONS])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, list):
        return " ".join(repr(x) for x in v)
    return repr(v)


def draw_samples(flux, count, seed, chunk, U=2.0, T=1.0, domain=None, tie_fraction=0.05):
    """Deterministic random boundary samples for one chunk of a sweep."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(chunk)]))
    lo, hi = domain if domain is not None else flux.check_box[1:3]
    t = rng.uniform(0.0, T, count)
    trace = rng.uniform(-U, U, count)
    datum = rng.uniform(-U, U, count)
    ties = rng.random(count) < tie_fraction
    datum[ties] = trace[ties]
    if flux.space_dim == 1:
        xi = rng.uniform(lo, hi, count)
        nu = np.where(rng.random(count) < 0.5, -1.0, 1.0)
    else:
        xi = rng.uniform(lo, hi, (count, flux.space_dim))
        nu = rng.standard_normal((count, flux.space_dim))
        nu /= np.linalg.norm(nu, axis=1, keepdims=True)
    return t, xi, nu, trace, datum


_WORKER_FLUX = None


def _sweep_chunk(args):
    flux, chunk, count, seed, k_grid, U, fault, tol = args
    flux = flux if flux is not None else _WORKER_FLUX
    t, xi, nu, trace, datum = draw_samples(flux, count, seed, chunk, U)
    res = evaluate_batch(flux, t, xi, nu, trace, datum, k_grid, base_tol=tol, fault=fault)
    rows = []
    for i in range(count):
        rows.append({
            "index": None, "t": float(t[i]),
            "xi": xi[i].tolist() if np.ndim(xi) > 1 else float(xi[i]),
            "nu": nu[i].tolist() if np.ndim(nu) > 1 else float(nu[i]),
            "trace": float(trace[i]), "datum": float(datum[i]),
            "verdicts": {c: bool(res[c].admissible[i]) for c in CONDITIONS},
            "worst": {c: float(res[c].worst_value[i]) for c in CONDITIONS},
            "worst_k": {c: float(res[c].worst_k[i]) for c in CONDITIONS},
            "tolerance": float(res["bln"].tolerance[i]),
        })
    return rows


def equivalence_sweep(flux: FluxModel, samples=10_000, k_grid=DEFAULT_K_GRID, seed=0, *, U=2.0,
                      chunk_size=1000, workers=1, tol=BASE_TOL, fault=None, keep_rows=True):
    """Check that the five pointwise conditions give the same verdict on random
    boundary samples.  Chunks use independent seeds so the report does not
    depend on ``workers``."""
    global _WORKER_FLUX
    if samples < 1:
        raise ValueError("samples must be >= 1")
    counts = [min(chunk_size, samples - s) for s in range(0, samples, chunk_size)]
    if workers > 1:
        _WORKER_FLUX = flux
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(workers) as pool:
            parts = pool.map(_sweep_chunk, [(None, c, n, seed, k_grid, U, fault, tol)
                                            for c, n in enumerate(counts)])
        _WORKER_FLUX = None
    else:
        parts = [_sweep_chunk((flux, c, n, seed, k_grid, U, fault, tol)) for c, n in enumerate(counts)]
    rows = [r for part in parts for r in part]
    report = SweepReport(flux.name, int(seed), samples, k_grid, float(U))
    for i, r in enumerate(rows):
        r["index"] = i
        if len(set(r["verdicts"].values())) > 1:
            report.disagreements.append(r)
    # margins closest to the verdict threshold on either side
    report.worst_margins = {}
    for c in CONDITIONS:
        margins = [r["worst"][c] + r["tolerance"] for r in rows]
        ok = [m for m, r in zip(margins, rows) if r["verdicts"][c]]
        bad = [m for m, r in zip(margins, rows) if not r["verdicts"][c]]
        report.worst_margins[c] = {"admissible_min": min(ok) if ok else None,
                                   "violated_max": max(bad) if bad else None}
    report.admissible_counts = {c: sum(r["verdicts"][c] for r in rows) for c in CONDITIONS}
    if keep_rows:
        report.rows = rows
    return report
