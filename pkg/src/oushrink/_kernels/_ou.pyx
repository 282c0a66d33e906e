# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled OU path kernel; same contract as ``_fallback.basis_integrals``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, sqrt, cos, sin, M_PI
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double SQRT2 = sqrt(2.0)


cdef inline double _variance(double a, double d) noexcept nogil:
    if a == 0.0:
        return d
    return expm1(2.0 * a * d) / (2.0 * a)


cdef inline void _trig(double t, Py_ssize_t p, double* out) noexcept nogil:
    cdef Py_ssize_t j
    cdef double arg
    out[0] = 1.0
    for j in range(1, p):
        arg = 2.0 * M_PI * ((j + 1) // 2) * t
        if j % 2:
            out[j] = SQRT2 * cos(arg)
        else:
            out[j] = SQRT2 * sin(arg)


def basis_integrals(Py_ssize_t n_steps, double h, double a, double rho1, double rho2,
                    const double[:, ::1] table, const cnp.int64_t[::1] counts,
                    const double[::1] times, const double[::1] marks,
                    const double[::1] normals):
    cdef Py_ssize_t nb = counts.shape[0]
    cdef Py_ssize_t p = table.shape[1]
    out = np.zeros((nb, p))
    cdef double[:, ::1] res = out
    cdef double* ft = <double*> malloc(p * sizeof(double))
    if ft == NULL:
        raise MemoryError()
    cdef Py_ssize_t b, k, j, jpos = 0, jend, npos = 0
    cdef double xi, xn, incr, t1, tl, d, jump
    cdef double q_h = exp(a * h)
    cdef double sd_h = rho1 * sqrt(_variance(a, h))
    cdef bint on_grid
    try:
        with nogil:
            for b in range(nb):
                jend = jpos + counts[b]
                xi = 0.0
                for k in range(n_steps):
                    t1 = (k + 1) * h
                    tl = k * h
                    on_grid = True
                    while jpos < jend and times[jpos] < t1:
                        d = times[jpos] - tl
                        xn = exp(a * d) * xi + rho1 * sqrt(_variance(a, d)) * normals[npos]
                        npos += 1
                        incr = xn - xi
                        if on_grid:
                            for j in range(p):
                                res[b, j] += table[k, j] * incr
                        else:
                            for j in range(p):
                                res[b, j] += ft[j] * incr
                        tl = times[jpos]
                        _trig(tl, p, ft)
                        on_grid = False
                        jump = rho2 * marks[jpos]
                        for j in range(p):
                            res[b, j] += ft[j] * jump
                        xi = xn + jump
                        jpos += 1
                    if on_grid:
                        xn = q_h * xi + sd_h * normals[npos]
                        incr = xn - xi
                        for j in range(p):
                            res[b, j] += table[k, j] * incr
                    else:
                        d = t1 - tl
                        xn = exp(a * d) * xi + rho1 * sqrt(_variance(a, d)) * normals[npos]
                        incr = xn - xi
                        for j in range(p):
                            res[b, j] += ft[j] * incr
                    npos += 1
                    xi = xn
                jpos = jend
    finally:
        free(ft)
    return out
