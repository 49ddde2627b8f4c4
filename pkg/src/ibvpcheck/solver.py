"""First-order Godunov finite-volume solver on an interval with ghost-cell
boundary data, plus trace extraction and field export."""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import _backend
from ._godunov import generic_godunov_fluxes
from .flux import FluxModel


class SolverError(RuntimeError):
    """Run aborted (time step underflow or blow-up)."""


@dataclass(frozen=True)
class IBVPProblem:
    flux: FluxModel
    u0: Callable
    ub_left: Callable
    ub_right: Callable
    domain: tuple = (0.0, 1.0)
    horizon: float = 1.0
    # known discontinuities of the data, used as quadrature breakpoints
    u0_breaks: tuple = ()
    ub_breaks: tuple = ()
    name: str = "problem"

    def __post_init__(self):
        a, b = self.domain
        if not a < b:
            raise ValueError("domain must satisfy a < b")
        if not self.horizon > 0:
            raise ValueError("horizon T must be positive")
        if self.flux.space_dim != 1:
            raise ValueError("the solver is one-dimensional")

    def datum(self, side, t):
        fn = self.ub_left if side == "left" else self.ub_right
        return np.asarray(fn(np.asarray(t, dtype=float)), dtype=float) + 0.0 * np.asarray(t, dtype=float)

    def data_bound(self, samples=257):
        a, b = self.domain
        xs = np.linspace(a, b, samples)
        ts = np.linspace(0.0, self.horizon, samples)
        vals = np.concatenate([np.ravel(self.u0(xs) + 0.0 * xs), np.ravel(self.datum("left", ts)),
                               np.ravel(self.datum("right", ts))])
        return float(vals.min()), float(vals.max())


@dataclass(frozen=True)
class Grid1D:
    cells: int
    domain: tuple = (0.0, 1.0)
    cfl: float = 0.45

    def __post_init__(self):
        if self.cells < 4:
            raise ValueError("at least 4 cells are required")
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl must lie in (0, 1]")
        if not self.domain[0] < self.domain[1]:
            raise ValueError("domain must satisfy a < b")

    @property
    def dx(self):
        return (self.domain[1] - self.domain[0]) / self.cells

    @property
    def edges(self):
        a, b = self.domain
        e = a + self.dx * np.arange(self.cells + 1)
        e[-1] = b
        return e

    @property
    def centers(self):
        return self.domain[0] + self.dx * (np.arange(self.cells) + 0.5)


@dataclass
class Field1D:
    """Cell averages at every stored time plus per-step bookkeeping.

    ``values[n]`` is the state on ``[times[n], times[n+1])``.  ``trace_left`` and
    ``trace_right`` hold the cells at distances ``(j - 1/2) dx``, ``j = 1..J``,
    from each end.
    """

    grid: Grid1D
    times: np.ndarray
    values: np.ndarray
    trace_left: np.ndarray
    trace_right: np.ndarray
    datum_left: np.ndarray
    datum_right: np.ndarray
    boundary_flux_left: np.ndarray = field(default_factory=lambda: np.zeros(0))
    boundary_flux_right: np.ndarray = field(default_factory=lambda: np.zeros(0))
    source_sum: np.ndarray = field(default_factory=lambda: np.zeros(0))
    backend: str = "python"

    @property
    def offsets(self):
        J = self.trace_left.shape[1]
        return (np.arange(1, J + 1) - 0.5) * self.grid.dx

    @property
    def dx(self):
        return self.grid.dx

    @property
    def horizon(self):
        return float(self.times[-1])

    def mass(self):
        return self.values.sum(axis=1) * self.grid.dx

    def with_trace(self, side, values):
        """Copy with the first-cell trace on ``side`` replaced (fault injection
        and synthetic fixtures)."""
        values = np.broadcast_to(np.asarray(values, dtype=float), self.times.shape)
        key = "trace_left" if side == "left" else "trace_right"
        log = getattr(self, key).copy()
        log[:, :] = values[:, None]
        return replace(self, **{key: log})

    # --- export ---------------------------------------------------------------

    def to_csv(self, path):
        x = self.grid.centers
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["t", "x", "u"])
            for t, row in zip(self.times, self.values):
                for xi, ui in zip(x, row):
                    w.writerow([repr(float(t)), repr(float(xi)), repr(float(ui))])

    def trace_to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["t", "side", "offset", "value"])
            for side, log in (("left", self.trace_left), ("right", self.trace_right)):
                for t, row in zip(self.times, log):
                    for off, v in zip(self.offsets, row):
                        w.writerow([repr(float(t)), side, repr(float(off)), repr(float(v))])

    def save_binary(self, path):
        """Little-endian float64 dump: header ``[M, S, dt0, T, a, b]``, then the
        ``S`` snapshot times, then the ``S x M`` values row by row."""
        M = self.grid.cells
        S = self.times.size
        dt0 = float(self.times[1] - self.times[0]) if S > 1 else 0.0
        header = [float(M), float(S), dt0, float(self.times[-1]), float(self.grid.domain[0]),
                  float(self.grid.domain[1])]
        with open(path, "wb") as fh:
            fh.write(struct.pack("<6d", *header))
            fh.write(np.asarray(self.times, dtype="<f8").tobytes())
            fh.write(np.asarray(self.values, dtype="<f8").tobytes())


def load_binary(path):
    """Read a dump written by :meth:`Field1D.save_binary`: returns
    ``(header dict, times, values)``."""
    with open(path, "rb") as fh:
        raw = fh.read()
    M, S, dt0, T, a, b = struct.unpack("<6d", raw[:48])
    M, S = int(M), int(S)
    body = np.frombuffer(raw[48:], dtype="<f8")
    if body.size != S * (M + 1):
        raise ValueError("binary dump has inconsistent length")
    return ({"cells": M, "snapshots": S, "dt0": dt0, "T": T, "domain": (a, b)},
            body[:S].copy(), body[S:].reshape(S, M).copy())


# --- numerical flux -----------------------------------------------------------

def godunov_numflux(flux: FluxModel, t, x_interface, uL, uR, backend=None):
    """``min f`` over ``[uL, uR]`` if ``uL <= uR``, else ``max f`` over ``[uR, uL]``."""
    scalar = np.ndim(uL) == 0 and np.ndim(uR) == 0 and np.ndim(x_interface) == 0
    x, ul, ur = (np.ascontiguousarray(np.broadcast_arrays(
        np.asarray(x_interface, dtype=float), np.asarray(uL, dtype=float),
        np.asarray(uR, dtype=float))[i], dtype=float).ravel() for i in range(3))
    kern = _select(backend)
    if flux.kernel is not None:
        code, p = flux.kernel
        out = kern.godunov_fluxes(int(code), float(p), x, ul, ur)
    else:
        out = generic_godunov_fluxes(flux, float(t), x, ul, ur)
    out = np.asarray(out)
    return float(out[0]) if scalar else out.reshape(np.broadcast(x_interface, uL, uR).shape)


def _select(backend):
    if backend is None:
        return _backend.kernels
    if backend == "python":
        return _backend.python_kernels
    if backend == "compiled":
        if _backend.compiled_kernels is None:
            raise RuntimeError("compiled kernel is not available")
        return _backend.compiled_kernels
    raise ValueError(f"unknown backend {backend!r}")


def speed_bound(flux: FluxModel, t, xs, umin, umax, samples=33):
    """``sup |df/du|`` over ``[umin, umax]`` sampled at the given positions."""
    us = np.linspace(umin, umax, samples)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if flux.autonomous:
        xs = xs[:1]
    sp = np.abs(np.asarray(flux.df_du(t, xs[:, None], us[None, :]), dtype=float))
    return float(sp.max())


# --- time stepping ------------------------------------------------------------

def _sample_u0(problem, grid):
    x = grid.centers
    return np.asarray(problem.u0(x), dtype=float) + 0.0 * x


def solve(problem: IBVPProblem, grid: Grid1D, *, dt: Optional[float] = None, max_steps=1_000_000,
          trace_levels=2, backend=None, store=True) -> Field1D:
    """Forward-Euler Godunov scheme with ghost cells holding the boundary data
    and Lie splitting for the source.

    ``dt`` fixes the step (it is still checked against the CFL bound);
    otherwise the step is ``cfl dx / sup|f'|`` over the current range of the
    field and ghost states.
    """
    if grid.domain != tuple(problem.domain):
        grid = Grid1D(grid.cells, tuple(problem.domain), grid.cfl)
    flux = problem.flux
    kern = _select(backend)
    M, dx, T = grid.cells, grid.dx, problem.horizon
    x_if = np.ascontiguousarray(grid.edges)
    xc = grid.centers
    u = np.ascontiguousarray(_sample_u0(problem, grid))
    lo, hi = problem.data_bound()
    bound = max(abs(lo), abs(hi), float(np.abs(u).max()), 1.0)
    J = trace_levels
    if not 1 <= J <= M // 2:
        raise ValueError("trace_levels out of range")

    times = [0.0]
    snaps = [u.copy()] if store else []
    tl, tr = [u[:J].copy()], [u[::-1][:J].copy()]
    dl, dr = [float(problem.datum("left", 0.0))], [float(problem.datum("right", 0.0))]
    fl_log, fr_log, src_log = [], [], []
    out = np.empty(M)
    fluxes = np.empty(M + 1)
    t = 0.0
    steps = 0
    while t < T * (1.0 - 1e-14):
        if steps >= max_steps:
            raise SolverError(f"maximum number of steps ({max_steps}) reached at t={t:.6g}")
        gl = float(problem.datum("left", t))
        gr = float(problem.datum("right", t))
        umin = min(float(u.min()), gl, gr)
        umax = max(float(u.max()), gl, gr)
        speed = speed_bound(flux, t, x_if, umin, umax)
        limit = grid.cfl * dx / speed if speed > 0 else np.inf
        step = min(limit, T - t) if dt is None else min(dt, T - t)
        if dt is not None and dt > limit * (1 + 1e-12):
            raise SolverError(f"dt={dt:.3e} violates the CFL bound {limit:.3e} at t={t:.6g}")
        if not step > 1e-14 * T:
            raise SolverError(f"time step underflow at t={t:.6g} (dt={step:.3e}, speed={speed:.3e})")
        lam = step / dx
        if flux.kernel is not None:
            code, p = flux.kernel
            kern.godunov_step(int(code), float(p), u, gl, gr, x_if, lam, out, fluxes)
        else:
            ext = np.concatenate([[gl], u, [gr]])
            fluxes[:] = generic_godunov_fluxes(flux, t, x_if, ext[:-1], ext[1:])
            out[:] = u - lam * (fluxes[1:] - fluxes[:-1])
        src = 0.0
        if flux.has_source:
            s = np.asarray(flux.source(t, xc, out), dtype=float) + 0.0 * xc
            src = float(s.sum() * dx)
            out = out + step * s
        if not np.all(np.isfinite(out)) or float(np.abs(out).max()) > 1e3 * bound:
            raise SolverError(f"blow-up detected at t={t:.6g}: max|u|={np.abs(out).max():.3e}")
        u, out = np.ascontiguousarray(out), u
        t = T if step == T - t else t + step
        steps += 1
        times.append(t)
        if store:
            snaps.append(u.copy())
        tl.append(u[:J].copy())
        tr.append(u[::-1][:J].copy())
        dl.append(float(problem.datum("left", t)))
        dr.append(float(problem.datum("right", t)))
        fl_log.append(fluxes[0])
        fr_log.append(fluxes[M])
        src_log.append(src)

    values = np.array(snaps) if store else u[None, :].copy()
    return Field1D(grid=grid, times=np.array(times), values=values, trace_left=np.array(tl),
                   trace_right=np.array(tr), datum_left=np.array(dl), datum_right=np.array(dr),
                   boundary_flux_left=np.array(fl_log), boundary_flux_right=np.array(fr_log),
                   source_sum=np.array(src_log),
                   backend="compiled" if kern is _backend.compiled_kernels else "python")


def conservation_defects(field: Field1D):
    """Per-step ``|mass_{n+1} - mass_n - dt (F_a - F_b) - dt S_n|`` relative to
    the mass scale."""
    mass = field.mass()
    dt = np.diff(field.times)
    expected = dt * (field.boundary_flux_left - field.boundary_flux_right) + dt * field.source_sum
    scale = np.maximum(1.0, np.abs(field.values[:-1]).sum(axis=1) * field.dx)
    return np.abs(np.diff(mass) - expected) / scale


@dataclass
class TraceSeries:
    times: np.ndarray
    values: np.ndarray
    quality: np.ndarray
    side: str


def extract_trace(field: Field1D, side="left", richardson=False) -> TraceSeries:
    """Near-boundary value per logged time: the first cell, or the linear
    extrapolation ``1.5 u_1 - 0.5 u_2`` to the boundary."""
    log = field.trace_left if side == "left" else field.trace_right
    if log.shape[1] < 2:
        raise ValueError("trace log needs at least two offset levels")
    first, second = log[:, 0], log[:, 1]
    value = 1.5 * first - 0.5 * second if richardson else first.copy()
    return TraceSeries(field.times.copy(), value, np.abs(first - second), side)
