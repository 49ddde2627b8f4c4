"""Sign helpers, entropy pairs and boundary entropy pairs.

Pairs are immutable bundles of vectorised callables.  Entropy fluxes that have
no closed form are evaluated as integrals of ``eta' * df/du`` with the batched
Gauss-Kronrod routine in :mod:`ibvpcheck.quadrature`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from .flux import FluxModel
from .quadrature import EPSABS, EPSREL, integrate, mollifier


# --- sign conventions ---------------------------------------------------------

def sgn(s):
    """Two-sided sign with ``sgn(0) = 0``."""
    return np.sign(np.asarray(s, dtype=float))


def sgn_plus(s):
    return (np.asarray(s, dtype=float) > 0.0).astype(float)


def sgn_minus(s):
    return -(np.asarray(s, dtype=float) < 0.0).astype(float)


def pos_part(s):
    return np.maximum(np.asarray(s, dtype=float), 0.0)


def neg_part(s):
    return np.maximum(-np.asarray(s, dtype=float), 0.0)


def parse_sign(sign) -> int:
    if sign in ("+", "plus", 1, +1.0):
        return 1
    if sign in ("-", "minus", -1, -1.0):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def semi_sgn(sign):
    return sgn_plus if parse_sign(sign) > 0 else sgn_minus


def semi_part(sign):
    return pos_part if parse_sign(sign) > 0 else neg_part


def interval_hull(w, k):
    """Closed interval with end points ``w`` and ``k`` as ``(lo, hi)``."""
    w = np.asarray(w, dtype=float)
    k = np.asarray(k, dtype=float)
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(k))):
        raise ValueError("interval end points must be finite")
    lo, hi = np.minimum(w, k), np.maximum(w, k)
    if lo.ndim == 0:
        return float(lo), float(hi)
    return lo, hi


def in_hull(z, w, k):
    """Membership ``z in I[w, k]`` via ``(w - z)(z - k) >= 0``."""
    return (np.asarray(w, dtype=float) - z) * (z - np.asarray(k, dtype=float)) >= 0.0


# --- pair types ---------------------------------------------------------------

@dataclass(frozen=True)
class EntropyPair:
    """Convex entropy ``eta`` with compatible flux ``q`` (and ``div_x q``)."""

    eta: Callable
    eta_prime: Callable
    q: Callable
    div_q: Callable
    flux: FluxModel
    name: str = "entropy"
    k: Optional[float] = None
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BoundaryEntropyPair:
    """Two-argument pair ``H(z, w)``, ``Q(t, x, z, w)`` vanishing on the diagonal."""

    H: Callable
    dH_dz: Callable
    Q: Callable
    div_Q: Callable
    flux: FluxModel
    name: str = "boundary-entropy"
    params: dict = field(default_factory=dict)


# --- flux integrals -----------------------------------------------------------

def _broadcast(flux, t, x, *arrays):
    """Broadcast ``t, x, *arrays`` to a common batch shape (``x`` keeps its
    trailing component axis when N > 1)."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    arrays = [np.asarray(a, dtype=float) for a in arrays]
    xb = x.shape if flux.space_dim == 1 else x.shape[:-1]
    shape = np.broadcast_shapes(t.shape, xb, *[a.shape for a in arrays])
    t = np.broadcast_to(t, shape)
    if flux.space_dim == 1:
        x = np.broadcast_to(x, shape)
    else:
        x = np.broadcast_to(x, shape + (x.shape[-1],))
    return shape, t, x, [np.broadcast_to(a, shape) for a in arrays]


def flux_integral(flux: FluxModel, weight, t, x, lower, upper, params=(),
                  breakpoints=None, derivative="df", epsabs=EPSABS, epsrel=EPSREL):
    """``int_lower^upper weight(lam, *params) * g(t, x, lam) dlam`` with
    ``g = df/du`` (``derivative='df'``) or ``g = d(div f)/du`` (``'ddiv'``).

    ``weight(nodes, *p)`` gets the per-segment parameters already expanded to
    shape ``(m, 1)``.  ``breakpoints`` is a list of arrays broadcastable to the
    batch shape.
    """
    shape, t, x, arrs = _broadcast(flux, t, x, lower, upper, *params)
    lower, upper, *params = arrs
    n = int(np.prod(shape))
    tf = t.reshape(n)
    xf = x.reshape(n) if flux.space_dim == 1 else x.reshape(n, -1)
    pf = [p.reshape(n) for p in params]
    deriv = flux.df_du if derivative == "df" else flux.ddivf_du
    vector = flux.space_dim > 1 and derivative == "df"

    def integrand(nodes, owner):
        w = weight(nodes, *[p[owner][:, None] for p in pf])
        if flux.space_dim == 1:
            g = deriv(tf[owner][:, None], xf[owner][:, None], nodes)
        else:
            g = deriv(tf[owner][:, None], xf[owner][:, None, :], nodes)
        if vector:
            return np.asarray(w)[..., None] * g
        return w * g

    bp = None
    if breakpoints:
        bp = np.stack([np.broadcast_to(np.asarray(b, dtype=float), shape).reshape(n)
                       for b in breakpoints], axis=-1)
    lo_f, up_f = lower.reshape(n), upper.reshape(n)
    if flux.autonomous and not vector and n >= 256:
        keys = np.stack([lo_f] + pf, axis=1)
        groups, inv = np.unique(keys, axis=0, return_inverse=True)
        if groups.shape[0] <= max(64, n // 50):
            vals, errs = _cumulative(integrand, lo_f, up_f, bp, groups, inv.ravel(), epsabs, epsrel)
            return vals.reshape(shape), errs.reshape(shape)
    vals, errs = integrate(integrand, lo_f, up_f, breakpoints=bp, epsabs=epsabs, epsrel=epsrel)
    if vector:
        return vals.reshape(shape + (flux.space_dim,)), errs.reshape(shape)
    return vals.reshape(shape), errs.reshape(shape)


def _cumulative(integrand, lower, upper, bp, groups, inv, epsabs, epsrel):
    """Many upper limits sharing one lower limit and parameter set: integrate
    between consecutive sorted end points and accumulate.  Valid when the
    integrand does not depend on the row other than through the group key
    (autonomous fluxes)."""
    vals = np.empty(lower.size)
    errs = np.empty(lower.size)
    for g in range(groups.shape[0]):
        rows = np.nonzero(inv == g)[0]
        anchor = lower[rows[0]]
        pts = [upper[rows], [anchor]]
        if bp is not None:
            extra = np.unique(bp[rows])
            pts.append(extra[np.isfinite(extra)])
        grid, where = np.unique(np.concatenate(pts), return_inverse=True)
        if grid.size == 1:
            vals[rows] = 0.0
            errs[rows] = 0.0
            continue
        owner_row = np.full(grid.size - 1, rows[0])
        seg, seg_err = integrate(lambda nodes, own: integrand(nodes, owner_row[own]),
                                 grid[:-1], grid[1:], epsabs=epsabs, epsrel=epsrel)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        cum_err = np.concatenate([[0.0], np.cumsum(seg_err)])
        i0 = int(np.searchsorted(grid, anchor))
        idx = where[:rows.size]
        vals[rows] = cum[idx] - cum[i0]
        errs[rows] = np.abs(cum_err[idx] - cum_err[i0])
    return vals, errs


def _fvals(flux, t, x, u):
    return np.asarray(flux.f(t, x, u), dtype=float)


def _expand(flux, s):
    """Scalar weight times vector flux: add the trailing axis for N > 1."""
    s = np.asarray(s, dtype=float)
    return s if flux.space_dim == 1 else s[..., None]


def _xb(flux, x):
    """``x`` without its component axis, for broadcasting against scalars."""
    x = np.asarray(x, dtype=float)
    return x if flux.space_dim == 1 else x[..., 0]


# --- Kruzhkov and semi-Kruzhkov pairs -----------------------------------------

def kruzkov_pair(flux: FluxModel, k) -> EntropyPair:
    """``|u - k|`` with flux ``sgn(u - k)(f(u) - f(k))``."""
    k = np.asarray(k, dtype=float)

    def q(t, x, u):
        u = np.asarray(u, dtype=float)
        return _expand(flux, sgn(u - k)) * (_fvals(flux, t, x, u) - _fvals(flux, t, x, k + 0.0 * u))

    def div_q(t, x, u):
        u = np.asarray(u, dtype=float)
        return sgn(u - k) * (flux.div_f(t, x, u) - flux.div_f(t, x, k + 0.0 * u))

    return EntropyPair(eta=lambda u: np.abs(np.asarray(u, dtype=float) - k),
                       eta_prime=lambda u: sgn(np.asarray(u, dtype=float) - k),
                       q=q, div_q=div_q, flux=flux, name="kruzkov", k=k,
                       params={"k": k})


def semi_kruzkov_pair(flux: FluxModel, k, sign) -> EntropyPair:
    """``(u - k)^+`` or ``(u - k)^-`` with flux ``sgn^+-(u - k)(f(u) - f(k))``."""
    s = parse_sign(sign)
    part, ssgn = semi_part(s), semi_sgn(s)
    k = np.asarray(k, dtype=float)

    def q(t, x, u):
        u = np.asarray(u, dtype=float)
        return _expand(flux, ssgn(u - k)) * (_fvals(flux, t, x, u) - _fvals(flux, t, x, k + 0.0 * u))

    def div_q(t, x, u):
        u = np.asarray(u, dtype=float)
        return ssgn(u - k) * (flux.div_f(t, x, u) - flux.div_f(t, x, k + 0.0 * u))

    return EntropyPair(eta=lambda u: part(np.asarray(u, dtype=float) - k),
                       eta_prime=lambda u: ssgn(np.asarray(u, dtype=float) - k),
                       q=q, div_q=div_q, flux=flux, name=f"semi-kruzkov{'+' if s > 0 else '-'}",
                       k=k, params={"k": k, "sign": s})


# --- smooth entropies with quadrature fluxes ----------------------------------

def _quadrature_pair(flux, k, eta, eta_prime, name, params, breaks_at_k=True):
    k = np.asarray(k, dtype=float)

    def weight(nodes, kk):
        return eta_prime(nodes, kk)

    def q(t, x, u):
        bp = [k] if breaks_at_k else None
        return flux_integral(flux, weight, t, x, k + 0.0 * np.asarray(u), u, params=(k,),
                             breakpoints=bp)[0]

    def div_q(t, x, u):
        if not flux.has_div:
            return np.zeros(np.broadcast_shapes(np.shape(u), np.shape(k), np.shape(t), np.shape(_xb(flux, x))))
        bp = [k] if breaks_at_k else None
        return flux_integral(flux, weight, t, x, k + 0.0 * np.asarray(u), u, params=(k,),
                             breakpoints=bp, derivative="ddiv")[0]

    return EntropyPair(eta=lambda u: eta(np.asarray(u, dtype=float), k),
                       eta_prime=lambda u: eta_prime(np.asarray(u, dtype=float), k),
                       q=q, div_q=div_q, flux=flux, name=name, k=k, params=params)


def quadratic_pair(flux: FluxModel, k) -> EntropyPair:
    """``(u - k)^2`` with flux computed by quadrature."""
    return _quadrature_pair(flux, k, lambda u, kk: (u - kk) ** 2,
                            lambda u, kk: 2.0 * (u - kk), "quadratic",
                            {"k": np.asarray(k, dtype=float)}, breaks_at_k=False)


def smooth_abs_family(flux: FluxModel, k, n) -> EntropyPair:
    """``sqrt((z - k)^2 + 1/n)``; tends to ``|z - k|`` with sup error ``n^{-1/2}``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    delta = 1.0 / float(n)
    return _quadrature_pair(flux, k, lambda u, kk: np.sqrt((u - kk) ** 2 + delta),
                            lambda u, kk: (u - kk) / np.sqrt((u - kk) ** 2 + delta),
                            f"smooth-abs[n={n}]", {"k": np.asarray(k, dtype=float), "n": n})


def smooth_abs_second_derivative(z, k, n):
    """Closed-form second derivative of :func:`smooth_abs_family`'s entropy."""
    delta = 1.0 / float(n)
    return delta / ((np.asarray(z, dtype=float) - k) ** 2 + delta) ** 1.5


# --- boundary pairs -----------------------------------------------------------

def _boundary_from_dH(flux, H, dH, name, params, breakpoints=lambda w: [w], extra=()):
    """Build ``Q`` and ``div Q`` as integrals from ``w`` to ``z`` of ``dH * g``."""
    extra = tuple(np.asarray(e, dtype=float) for e in extra)

    def weight(nodes, ww, *e):
        return dH(nodes, ww, *e)

    def Q(t, x, z, w):
        return flux_integral(flux, weight, t, x, w, z, params=(w,) + extra,
                             breakpoints=breakpoints(w))[0]

    def div_Q(t, x, z, w):
        if not flux.has_div:
            shape = np.broadcast_shapes(np.shape(z), np.shape(w), np.shape(t), np.shape(_xb(flux, x)))
            return np.zeros(shape)
        return flux_integral(flux, weight, t, x, w, z, params=(w,) + extra,
                             breakpoints=breakpoints(w), derivative="ddiv")[0]

    return BoundaryEntropyPair(
        H=lambda z, w: H(np.asarray(z, dtype=float), np.asarray(w, dtype=float), *extra),
        dH_dz=lambda z, w: dH(np.asarray(z, dtype=float), np.asarray(w, dtype=float), *extra),
        Q=Q, div_Q=div_Q, flux=flux, name=name, params=params)


def smoothed_semi_pair(flux: FluxModel, sign, n) -> BoundaryEntropyPair:
    """``H_n(z, w) = sqrt(((z - w)^+-)^2 + 1/n^2) - 1/n`` with its quadrature flux.

    Used with ``w = k`` this tends to the semi-Kruzhkov pair at rate ``1/n``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    s = parse_sign(sign)
    part = semi_part(s)
    eps = 1.0 / float(n)

    def H(z, w):
        a = part(z - w)
        return np.sqrt(a * a + eps * eps) - eps

    def dH(z, w):
        a = part(z - w)
        return s * a / np.sqrt(a * a + eps * eps)

    return _boundary_from_dH(flux, H, dH, f"smoothed-semi{'+' if s > 0 else '-'}[n={n}]",
                             {"sign": s, "n": n})


def distance_to_hull(u, w, k):
    """Distance from ``u`` to ``I[w, k]`` and its derivative in ``u``."""
    u = np.asarray(u, dtype=float)
    lo = np.minimum(w, k)
    hi = np.maximum(w, k)
    dist = np.maximum(np.maximum(lo - u, u - hi), 0.0)
    slope = np.where(u < lo, -1.0, np.where(u > hi, 1.0, 0.0))
    return dist, slope


def distance_pair_family(flux: FluxModel, k, n=None) -> BoundaryEntropyPair:
    """Pair built on the distance to ``I[w, k]``.

    ``n`` finite gives ``sqrt(dist^2 + 1/n^2) - 1/n``; ``n=None`` gives the
    Lipschitz limit ``(dist, Q)`` whose flux equals the flux-comparison
    function (it is still computed by quadrature here, independently of the
    closed forms in :mod:`ibvpcheck.boundary`).
    """
    k = np.asarray(k, dtype=float)
    if n is None:
        def H(z, w, kk):
            return distance_to_hull(z, w, kk)[0]

        def dH(z, w, kk):
            return distance_to_hull(z, w, kk)[1]
        name = "distance[limit]"
    else:
        if n < 1:
            raise ValueError("n must be >= 1")
        eps = 1.0 / float(n)

        def H(z, w, kk):
            d = distance_to_hull(z, w, kk)[0]
            return np.sqrt(d * d + eps * eps) - eps

        def dH(z, w, kk):
            d, sl = distance_to_hull(z, w, kk)
            return sl * d / np.sqrt(d * d + eps * eps)
        name = f"distance[n={n}]"
    return _boundary_from_dH(flux, H, dH, name, {"k": k, "n": n},
                             breakpoints=lambda w: [w, k], extra=(k,))


def shifted_limit_pair(base: EntropyPair, k) -> BoundaryEntropyPair:
    """Six-case pair built from an entropy ``eta`` vanishing at ``k``.

    ``H(z, w)`` is zero when ``z`` lies between ``w`` and ``k``, equals
    ``eta(z)`` when ``k`` separates ``z`` from ``w`` and ``eta(z) - eta(w)``
    when ``w`` does.
    """
    k = float(k)
    _require_zero_at(base, k)
    flux = base.flux

    def cases(z, w):
        z, w = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(w, dtype=float))
        between = ((w <= z) & (z <= k)) | ((k <= z) & (z <= w))
        across = ((w <= k) & (k <= z)) | ((z <= k) & (k <= w))
        return z, w, between, across & ~between

    def H(z, w):
        z, w, between, across = cases(z, w)
        out = base.eta(z) - base.eta(w)
        out = np.where(across, base.eta(z), out)
        return np.where(between, 0.0, out)

    def dH(z, w):
        z, w, between, _ = cases(z, w)
        return np.where(between, 0.0, base.eta_prime(z))

    def _combine(fun, t, x, z, w):
        z, w, between, across = cases(z, w)
        qz = np.asarray(fun(t, x, z), dtype=float)
        qw = np.asarray(fun(t, x, w), dtype=float)
        out = np.where(_expand(flux, across), qz, qz - qw)
        return np.where(_expand(flux, between), 0.0, out)

    return BoundaryEntropyPair(H=H, dH_dz=dH,
                               Q=lambda t, x, z, w: _combine(base.q, t, x, z, w),
                               div_Q=lambda t, x, z, w: _combine(base.div_q, t, x, z, w),
                               flux=flux, name=f"shifted[{base.name},limit]",
                               params={"k": k, "n": None})


def _require_zero_at(base, k):
    if abs(float(base.eta(np.array(k)))) > 1e-12:
        raise ValueError(f"base entropy must vanish at k={k}")


def shifted_pair_family(base: EntropyPair, k, n) -> BoundaryEntropyPair:
    """Mollified approximations of :func:`shifted_limit_pair`.

    The entropy is first clipped to zero on a ``1/n``-enlargement of the
    interval between ``w`` and ``k``, shifted so that it stays continuous,
    then convolved with the unit-mass bump of radius ``1/n``.
    """
    if n is None:
        return shifted_limit_pair(base, k)
    if n < 1:
        raise ValueError("n must be >= 1")
    k = float(k)
    _require_zero_at(base, k)
    flux = base.flux
    eps = 1.0 / float(n)

    def zero_zone(w):
        w = np.asarray(w, dtype=float)
        lo = np.where(w <= k, w - eps, k - eps)
        hi = np.where(w <= k, k + eps, w + eps)
        return lo, hi

    def clipped(lam, w):
        lo, hi = zero_zone(w)
        left = base.eta(lam) - base.eta(lo)
        right = base.eta(lam) - base.eta(hi)
        return np.where(lam < lo, left, np.where(lam > hi, right, 0.0))

    def clipped_slope(lam, w):
        lo, hi = zero_zone(w)
        return np.where((lam < lo) | (lam > hi), base.eta_prime(lam), 0.0)

    def smooth(profile):
        def value(z, w):
            z, w = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(w, dtype=float))
            shape = z.shape
            zf, wf = z.ravel(), w.ravel()
            lo, hi = zero_zone(wf)
            # kinks of the clipped profile seen from the mollifier variable
            bps = np.stack([(zf - lo) / eps, (zf - hi) / eps, (zf - k) / eps], axis=-1)

            def integrand(s, owner):
                return profile(zf[owner][:, None] - eps * s, wf[owner][:, None]) * mollifier(s)

            vals, _ = integrate(integrand, -np.ones_like(zf), np.ones_like(zf), breakpoints=bps,
                                epsabs=1e-13, epsrel=1e-11)
            return vals.reshape(shape)
        return value

    H = smooth(clipped)
    dH = smooth(clipped_slope)

    def outer(t, x, z, w, derivative):
        def weight(nodes, ww):
            return dH(nodes, np.broadcast_to(ww, nodes.shape))
        lo, hi = zero_zone(w)
        return flux_integral(flux, weight, t, x, w, z, params=(w,),
                             breakpoints=[lo - eps, lo + eps, hi - eps, hi + eps],
                             derivative=derivative)[0]

    def div_Q(t, x, z, w):
        if not flux.has_div:
            return np.zeros(np.broadcast_shapes(np.shape(z), np.shape(w), np.shape(t), np.shape(_xb(flux, x))))
        return outer(t, x, z, w, "ddiv")

    return BoundaryEntropyPair(H=H, dH_dz=dH, Q=lambda t, x, z, w: outer(t, x, z, w, "df"),
                               div_Q=div_Q, flux=flux, name=f"shifted[{base.name},n={n}]",
                               params={"k": k, "n": n})


# --- property verification ----------------------------------------------------

@dataclass
class PairReport:
    """Maximum violation of each defining property over the sample set."""

    pair: str
    samples: int
    violations: dict
    tolerance: float

    @property
    def passed(self):
        return all(v <= self.tolerance for v in self.violations.values())

    def failed(self):
        return sorted(name for name, v in self.violations.items() if v > self.tolerance)

    def as_dict(self):
        return {"pair": self.pair, "samples": self.samples, "tolerance": self.tolerance,
                "violations": dict(self.violations), "passed": self.passed}


def _sobol(dim, samples, seed):
    m = int(np.ceil(np.log2(max(samples, 2))))
    pts = qmc.Sobol(d=dim, scramble=True, seed=seed).random_base2(m)
    return pts[:samples]


def _box_samples(flux, samples, seed, box, extra):
    T, lo, hi, U = box if box is not None else flux.check_box
    N = flux.space_dim
    pts = _sobol(2 + N + extra, samples, seed)
    t = pts[:, 0] * T
    x = lo + (hi - lo) * pts[:, 1:1 + N]
    if N == 1:
        x = x[:, 0]
    rest = pts[:, 1 + N:]
    return t, x, rest, U


def _reference_integral(flux, slope, t, x, a, b, params=(), kinks=()):
    """Independent evaluation of ``int_a^b slope * df`` (tighter tolerances, two
    halves) used to test the compatibility of a supplied flux."""
    mid = 0.5 * (a + b)
    kinks = [np.asarray(c, dtype=float) for c in kinks if c is not None] or None
    first = flux_integral(flux, slope, t, x, a, mid, params=params, breakpoints=kinks,
                          epsabs=1e-13, epsrel=1e-11)[0]
    second = flux_integral(flux, slope, t, x, mid, b, params=params, breakpoints=kinks,
                           epsabs=1e-13, epsrel=1e-11)[0]
    return first + second


def verify_entropy_pair(pair: EntropyPair, flux: Optional[FluxModel] = None, samples=1000,
                        seed=0, box=None, tol=1e-7) -> PairReport:
    """Convexity of ``eta`` and ``dq/du = eta' df/du`` on quasi-random samples."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    flux = flux or pair.flux
    t, x, r, U = _box_samples(flux, samples, seed, box, 3)
    a = -U + 2 * U * r[:, 0]
    b = -U + 2 * U * r[:, 1]
    th = r[:, 2]
    conv = pair.eta(th * a + (1 - th) * b) - th * pair.eta(a) - (1 - th) * pair.eta(b)
    dq = np.asarray(pair.q(t, x, b), dtype=float) - np.asarray(pair.q(t, x, a), dtype=float)
    ref = _reference_integral(flux, lambda lam: pair.eta_prime(lam), t, x, a, b, kinks=(pair.k,))
    compat = np.abs(dq - ref)
    if compat.ndim > 1:
        compat = compat.max(axis=-1)
    violations = {"convexity": float(max(conv.max(), 0.0)),
                  "compatibility": float(compat.max())}
    return PairReport(pair.name, samples, violations, tol)


def verify_boundary_pair(pair: BoundaryEntropyPair, flux: Optional[FluxModel] = None,
                         samples=1000, seed=0, box=None, tol=1e-7) -> PairReport:
    """Convexity in ``z``, diagonal conditions, ``H >= 0`` and compatibility."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    flux = flux or pair.flux
    t, x, r, U = _box_samples(flux, samples, seed, box, 4)
    a = -U + 2 * U * r[:, 0]
    b = -U + 2 * U * r[:, 1]
    w = -U + 2 * U * r[:, 2]
    th = r[:, 3]
    H = pair.H
    conv = H(th * a + (1 - th) * b, w) - th * H(a, w) - (1 - th) * H(b, w)
    diag_q = np.abs(np.asarray(pair.Q(t, x, w, w), dtype=float))
    if diag_q.ndim > 1:
        diag_q = diag_q.max(axis=-1)
    dq = np.asarray(pair.Q(t, x, b, w), dtype=float) - np.asarray(pair.Q(t, x, a, w), dtype=float)
    ref = _reference_integral(flux, lambda lam, ww: pair.dH_dz(lam, np.broadcast_to(ww, lam.shape)),
                              t, x, a, b, params=(w,), kinks=(w, pair.params.get("k")))
    compat = np.abs(dq - ref)
    if compat.ndim > 1:
        compat = compat.max(axis=-1)
    violations = {
        "convexity": float(max(conv.max(), 0.0)),
        "diagonal_H": float(np.abs(H(w, w)).max()),
        "diagonal_dH": float(np.abs(pair.dH_dz(w, w)).max()),
        "diagonal_Q": float(diag_q.max()),
        "nonnegative": float(max((-H(a, w)).max(), 0.0)),
        "compatibility": float(compat.max()),
    }
    return PairReport(pair.name, samples, violations, tol)
