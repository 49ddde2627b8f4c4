"""Flux/source models and the built-in flux catalog."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

Fn = Callable[..., np.ndarray]

# codes understood by the compiled Godunov kernel
KERNEL_LINEAR = 0
KERNEL_BURGERS = 1
KERNEL_BUCKLEY_LEVERETT = 2
KERNEL_NONAUTONOMOUS = 3


def _zero(t, x, u):
    return np.zeros(np.shape(u))


@dataclass(frozen=True)
class FluxModel:
    """Flux ``f(t, x, u)`` (values in R^N) and source ``F(t, x, u)``.

    Callables take numpy-broadcastable arguments.  For ``space_dim == 1`` the
    flux returns the shape of ``u``; otherwise a trailing axis of length N is
    appended and ``x`` carries a trailing axis of length N as well.

    Missing derivatives are replaced by central differences with step
    ``max(1e-6, 1e-6 |u|)``.  When ``df_du`` is given analytically it is checked
    against that difference on construction.
    """

    f: Fn
    df_du: Optional[Fn] = None
    div_f: Optional[Fn] = None
    source: Optional[Fn] = None
    dsource_du: Optional[Fn] = None
    ddivf_du: Optional[Fn] = None
    space_dim: int = 1
    name: str = "custom"
    autonomous: bool = False
    kernel: Optional[tuple] = None
    check_box: tuple = (1.0, 0.0, 1.0, 2.0)
    derivative_mode: str = field(init=False, default="analytic")

    def __post_init__(self):
        if self.space_dim < 1:
            raise ValueError("space_dim must be >= 1")
        set_ = object.__setattr__
        if self.df_du is None:
            set_(self, "derivative_mode", "finite-difference-fallback")
            set_(self, "df_du", _central_difference(self.f))
        else:
            set_(self, "derivative_mode", "analytic")
        if self.div_f is None:
            set_(self, "div_f", _zero)
            if self.ddivf_du is None:
                set_(self, "ddivf_du", _zero)
        if self.ddivf_du is None:
            set_(self, "ddivf_du", _central_difference(self.div_f))
        if self.source is None:
            set_(self, "source", _zero)
            if self.dsource_du is None:
                set_(self, "dsource_du", _zero)
        if self.dsource_du is None:
            set_(self, "dsource_du", _central_difference(self.source))
        if self.derivative_mode == "analytic":
            self.self_check()

    @property
    def has_source(self):
        return self.source is not _zero

    @property
    def has_div(self):
        return self.div_f is not _zero

    def sample_points(self, n=64, seed=0):
        """Deterministic sample of ``(t, x, u)`` in the declared check box."""
        T, lo, hi, U = self.check_box
        rng = np.random.default_rng(seed)
        t = rng.uniform(0.0, T, n)
        if self.space_dim == 1:
            x = rng.uniform(lo, hi, n)
        else:
            x = rng.uniform(lo, hi, (n, self.space_dim))
        u = rng.uniform(-U, U, n)
        return t, x, u

    def self_check(self, n=64, rtol=1e-5):
        """Raise ``ValueError`` if ``df_du`` disagrees with a central difference of ``f``."""
        t, x, u = self.sample_points(n)
        analytic = np.asarray(self.df_du(t, x, u), dtype=float)
        fd = _central_difference(self.f, step=1e-5)(t, x, u)
        vals = np.asarray(self.f(t, x, u), dtype=float)
        if not (np.all(np.isfinite(analytic)) and np.all(np.isfinite(vals))):
            raise ValueError(f"flux {self.name!r}: non-finite values on the check box")
        err = np.abs(analytic - fd)
        if np.any(err > rtol * (1.0 + np.abs(fd))):
            raise ValueError(
                f"flux {self.name!r}: df_du inconsistent with f (max deviation {err.max():.3e})")

    def normal(self, t, x, u, nu):
        """``f(t, x, u) . nu``."""
        vals = np.asarray(self.f(t, x, u), dtype=float)
        if self.space_dim == 1:
            return vals * nu
        return np.sum(vals * nu, axis=-1)


def _central_difference(fun, step=None):
    def derivative(t, x, u):
        u = np.asarray(u, dtype=float)
        h = np.maximum(1e-6, 1e-6 * np.abs(u)) if step is None else np.maximum(step, step * np.abs(u))
        fp = np.asarray(fun(t, x, u + h), dtype=float)
        fm = np.asarray(fun(t, x, u - h), dtype=float)
        if fp.ndim > np.ndim(u) and fp.shape[-1] != np.shape(h)[-1:]:
            h = np.asarray(h)[..., None]
        return (fp - fm) / (2.0 * h)
    return derivative


# --- catalog -----------------------------------------------------------------

def burgers():
    return FluxModel(
        f=lambda t, x, u: 0.5 * np.asarray(u, dtype=float) ** 2,
        df_du=lambda t, x, u: np.asarray(u, dtype=float) * 1.0,
        name="burgers", autonomous=True, kernel=(KERNEL_BURGERS, 0.0))


def linear(a=1.0):
    a = float(a)
    return FluxModel(
        f=lambda t, x, u: a * np.asarray(u, dtype=float),
        df_du=lambda t, x, u: np.full(np.shape(u), a),
        name=f"linear:{a:g}", autonomous=True, kernel=(KERNEL_LINEAR, a))


def buckley_leverett(m=0.5):
    m = float(m)

    def f(t, x, u):
        u = np.asarray(u, dtype=float)
        return u ** 2 / (u ** 2 + m * (1.0 - u) ** 2)

    def df(t, x, u):
        u = np.asarray(u, dtype=float)
        d = u ** 2 + m * (1.0 - u) ** 2
        return 2.0 * m * u * (1.0 - u) / d ** 2

    return FluxModel(f=f, df_du=df, name=f"buckley-leverett:{m:g}", autonomous=True,
                     kernel=(KERNEL_BUCKLEY_LEVERETT, m))


def _demo_coeff(x):
    return 1.0 + 0.5 * np.sin(2.0 * np.pi * np.asarray(x, dtype=float))


def _demo_coeff_dx(x):
    return np.pi * np.cos(2.0 * np.pi * np.asarray(x, dtype=float))


def nonautonomous_demo():
    """``f(t, x, u) = a(x) u^2 / 2`` with ``a(x) = 1 + sin(2 pi x) / 2``."""
    return FluxModel(
        f=lambda t, x, u: 0.5 * _demo_coeff(x) * np.asarray(u, dtype=float) ** 2,
        df_du=lambda t, x, u: _demo_coeff(x) * np.asarray(u, dtype=float),
        div_f=lambda t, x, u: 0.5 * _demo_coeff_dx(x) * np.asarray(u, dtype=float) ** 2,
        ddivf_du=lambda t, x, u: _demo_coeff_dx(x) * np.asarray(u, dtype=float),
        name="nonautonomous-demo", kernel=(KERNEL_NONAUTONOMOUS, 0.0))


CATALOG = ("burgers", "linear:a", "buckley-leverett[:m]", "nonautonomous-demo")


def get_flux(name: str) -> FluxModel:
    """Look up a catalog flux: ``burgers``, ``linear:a``, ``buckley-leverett[:m]``,
    ``nonautonomous-demo``."""
    head, _, arg = name.strip().partition(":")
    head = head.lower()
    try:
        if head == "burgers" and not arg:
            return burgers()
        if head == "linear":
            return linear(float(arg) if arg else 1.0)
        if head == "buckley-leverett":
            return buckley_leverett(float(arg) if arg else 0.5)
        if head == "nonautonomous-demo" and not arg:
            return nonautonomous_demo()
    except ValueError as exc:
        raise ValueError(f"bad flux parameter in {name!r}") from exc
    raise ValueError(f"unknown flux {name!r}; catalog: {', '.join(CATALOG)}")


# --- Lipschitz constant -------------------------------------------------------

def lipschitz_norm(flux: FluxModel, T: float, domain, U: float, *, rtol=1e-3,
                   start=9, max_levels=8) -> float:
    """Sup of ``|df/du|`` (Euclidean norm for N > 1) over ``[0,T] x domain x [-U,U]``.

    ``domain`` is ``(lo, hi)`` in 1D or a sequence of per-axis intervals.  The
    tensor sample grid is refined (nested halving) until two successive
    estimates agree to ``rtol``; the best grid point is then polished with a
    bounded scalar maximisation in ``u``.
    """
    if U < 0:
        raise ValueError("U must be non-negative")
    axes = [tuple(domain)] if flux.space_dim == 1 and np.ndim(domain[0]) == 0 else [tuple(d) for d in domain]
    n = start
    prev = None
    best = None
    for _ in range(max_levels):
        tt = np.array([0.0]) if flux.autonomous else np.linspace(0.0, T, n)
        xs = [np.array([0.5 * (lo + hi)]) if flux.autonomous else np.linspace(lo, hi, n) for lo, hi in axes]
        us = np.linspace(-U, U, 2 * n - 1)
        grids = np.meshgrid(tt, *xs, us, indexing="ij")
        t = grids[0].ravel()
        u = grids[-1].ravel()
        x = grids[1].ravel() if flux.space_dim == 1 else np.stack([g.ravel() for g in grids[1:-1]], axis=-1)
        speed = _speed_norm(flux, t, x, u)
        if not np.all(np.isfinite(speed)):
            raise ValueError(f"flux {flux.name!r}: non-finite derivative on the sample grid")
        i = int(np.argmax(speed))
        best = (float(speed[i]), t[i], x[i], u[i], us[1] - us[0] if us.size > 1 else 0.0)
        if prev is not None and abs(best[0] - prev) <= rtol * max(abs(best[0]), 1e-300):
            break
        prev = best[0]
        n = 2 * n - 1
    value, t0, x0, u0, h = best
    if U > 0 and h > 0:
        lo_u, hi_u = max(-U, u0 - h), min(U, u0 + h)
        res = minimize_scalar(lambda s: -float(_speed_norm(flux, t0, x0, np.array(s))),
                              bounds=(lo_u, hi_u), method="bounded", options={"xatol": 1e-12})
        value = max(value, -float(res.fun))
    return value


def _speed_norm(flux, t, x, u):
    d = np.asarray(flux.df_du(t, x, u), dtype=float)
    if flux.space_dim == 1:
        return np.abs(d)
    return np.sqrt(np.sum(d * d, axis=-1))


# --- extrema of f over an interval -------------------------------------------

_GOLD = 0.5 * (np.sqrt(5.0) - 1.0)


def extremum_on_interval(fun, lo, hi, *, maximize, scan=33, iters=64):
    """Batched ``max`` (or ``min``) of ``fun`` over ``[lo_i, hi_i]`` (1-D arrays).

    ``fun(u, rows)`` receives ``u`` of shape ``(len(rows), m)`` together with
    the integer row indices it refers to.  A uniform scan locates the best
    sample; golden-section search on the neighbouring bracket then polishes
    interior extrema.  Returns ``(value, argument)``.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    sgn = 1.0 if maximize else -1.0
    rows = np.arange(lo.size)
    grid = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, scan)
    vals = sgn * np.asarray(fun(grid, rows), dtype=float)
    i = np.argmax(vals, axis=1)
    best = vals[rows, i]
    arg = grid[rows, i]
    # an extremum within one spacing of an end point may hide behind it, so
    # end-point winners are polished too (bracket clipped to the interval)
    sel = np.nonzero(hi > lo)[0]
    if sel.size:
        def g(u):
            return sgn * np.asarray(fun(u[:, None], sel), dtype=float)[:, 0]

        width = (hi - lo)[sel] / (scan - 1)
        a = np.maximum(arg[sel] - width, lo[sel])
        b = np.minimum(arg[sel] + width, hi[sel])
        c = b - _GOLD * (b - a)
        d = a + _GOLD * (b - a)
        gc, gd = g(c), g(d)
        for _ in range(iters):
            left = gc > gd
            a = np.where(left, a, c)
            b = np.where(left, d, b)
            c_new = np.where(left, b - _GOLD * (b - a), d)
            d_new = np.where(left, c, a + _GOLD * (b - a))
            gval = g(np.where(left, c_new, d_new))
            gc, gd = np.where(left, gval, gd), np.where(left, gc, gval)
            c, d = c_new, d_new
        m = 0.5 * (a + b)
        gm = g(m)
        better = gm > best[sel]
        best[sel[better]] = gm[better]
        arg[sel[better]] = m[better]
    return sgn * best, arg
