# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Godunov kernels for the catalog fluxes."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, M_PI

cnp.import_array()


cdef inline double _f(int code, double p, double x, double u) noexcept nogil:
    cdef double d
    if code == 0:
        return p * u
    if code == 1:
        return 0.5 * u * u
    if code == 2:
        d = u * u + p * (1.0 - u) * (1.0 - u)
        return u * u / d
    # code 3: a(x) u^2 / 2
    return 0.5 * (1.0 + 0.5 * sin(2.0 * M_PI * x)) * u * u


cdef inline double _godunov(int code, double p, double x, double ul, double ur) noexcept nogil:
    cdef double lo, hi, fl, fr, best, c
    fl = _f(code, p, x, ul)
    fr = _f(code, p, x, ur)
    if ul <= ur:
        lo = ul
        hi = ur
        best = fl if fl < fr else fr
    else:
        lo = ur
        hi = ul
        best = fl if fl > fr else fr
    # interior critical points: 0 for the quadratic fluxes, 0 and 1 for the S-shaped one
    if code != 0 and lo < 0.0 and 0.0 < hi:
        c = _f(code, p, x, 0.0)
        if (ul <= ur and c < best) or (ul > ur and c > best):
            best = c
    if code == 2 and lo < 1.0 and 1.0 < hi:
        c = _f(code, p, x, 1.0)
        if (ul <= ur and c < best) or (ul > ur and c > best):
            best = c
    return best


def godunov_fluxes(int code, double p, double[::1] x, double[::1] ul, double[::1] ur):
    """Godunov fluxes for arrays of interface states."""
    cdef Py_ssize_t i, n = ul.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _godunov(code, p, x[i], ul[i], ur[i])
    return out


def godunov_step(int code, double p, double[::1] u, double gl, double gr,
                 double[::1] x_if, double lam, double[::1] out, double[::1] fluxes):
    """One conservative update ``out = u - lam (F_{i+1/2} - F_{i-1/2})`` with
    ghost states ``gl``/``gr``; interface fluxes are written to ``fluxes``."""
    cdef Py_ssize_t i, m = u.shape[0]
    cdef double a, b
    with nogil:
        for i in range(m + 1):
            a = gl if i == 0 else u[i - 1]
            b = gr if i == m else u[i]
            fluxes[i] = _godunov(code, p, x_if[i], a, b)
        for i in range(m):
            out[i] = u[i] - lam * (fluxes[i + 1] - fluxes[i])
