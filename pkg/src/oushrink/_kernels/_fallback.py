"""Pure numpy implementation of the OU path kernels.

This is both the fallback used when the compiled extension is unavailable
and the building block of the reference path simulator in
:mod:`oushrink.oulevy`.
"""

from __future__ import annotations

import math

import numpy as np

SQRT2 = math.sqrt(2.0)
# Longest time span (times |a|) rescaled in one go by linear_recurrence.
_SPAN = 20.0


def trig_values(t, p: int) -> np.ndarray:
    """``(phi_1(t), ..., phi_p(t))`` stacked on a new last axis.

    phi_1 = 1, phi_{2k} = sqrt2 cos(2 pi k t), phi_{2k+1} = sqrt2 sin(2 pi k t).
    """
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape + (p,))
    out[..., 0] = 1.0
    for j in range(1, p):
        arg = 2.0 * math.pi * ((j + 1) // 2) * t
        out[..., j] = SQRT2 * (np.cos(arg) if j % 2 else np.sin(arg))
    return out


def innovation_variance(a: float, delta):
    """Variance of ``int_0^delta exp(a (delta - s)) dw_s``."""
    delta = np.asarray(delta, dtype=float)
    if a == 0.0:
        return delta
    return np.expm1(2.0 * a * delta) / (2.0 * a)


def merge_jumps(uniform: np.ndarray, jump_times: np.ndarray):
    """Insert jump times into a uniform grid.

    Returns ``(points, source)`` where ``source[i] >= 0`` is the uniform index of
    ``points[i]`` and ``source[i] = -(l + 1)`` marks jump ``l``.  A jump equal
    to a uniform point is placed after it.
    """
    if jump_times.size == 0:
        return uniform, np.arange(uniform.size)
    pos = np.searchsorted(uniform, jump_times, side="right")
    points = np.insert(uniform, pos, jump_times)
    source = np.insert(np.arange(uniform.size), pos, -(np.arange(jump_times.size) + 1))
    return points, source


def linear_recurrence(t: np.ndarray, b: np.ndarray, a: float) -> np.ndarray:
    """Solve ``x_0 = 0, x_{m+1} = exp(a (t_{m+1} - t_m)) x_m + b_m``."""
    x = np.empty(t.size)
    x[0] = 0.0
    if a == 0.0:
        np.cumsum(b, out=x[1:])
        return x
    span = _SPAN / abs(a)
    s, last = 0, t.size - 1
    while s < last:
        e = int(np.searchsorted(t, t[s] + span, side="right")) - 1
        e = min(max(e, s + 1), last)
        tt = t[s + 1 : e + 1] - t[s]
        acc = np.cumsum(np.exp(-a * tt) * b[s:e])
        x[s + 1 : e + 1] = np.exp(a * tt) * (x[s] + acc)
        s = e
    return x


def path_values(points, source, a, rho1, rho2, marks, normals):
    """OU values (right-continuous) and jump sizes at every grid point."""
    delta = np.diff(points)
    innov = rho1 * np.sqrt(innovation_variance(a, delta)) * normals
    jumps = np.zeros(points.size)
    is_jump = source < 0
    jumps[is_jump] = rho2 * marks[-source[is_jump] - 1]
    xi = linear_recurrence(points, innov + jumps[1:], a)
    return xi, jumps


def basis_integrals(n_steps, h, a, rho1, rho2, table, counts, times, marks, normals):
    """``I_n(phi_j)`` for a block of paths.

    Path ``b`` owns ``counts[b]`` consecutive entries of ``times``/``marks``
    (sorted jump times and their marks) and ``n_steps + counts[b]`` consecutive
    standard normals, one per grid cell in time order.  ``table[k]`` holds the
    basis at the uniform point ``k * h``.
    """
    counts = np.asarray(counts)
    p = table.shape[1]
    out = np.zeros((counts.size, p))
    uniform = np.arange(n_steps + 1) * h
    jpos = npos = 0
    for b in range(counts.size):
        k = int(counts[b])
        jt = times[jpos : jpos + k]
        points, source = merge_jumps(uniform, jt)
        z = normals[npos : npos + n_steps + k]
        xi, jumps = path_values(points, source, a, rho1, rho2, marks[jpos : jpos + k], z)
        cont = np.diff(xi) - jumps[1:]
        left = source[:-1]
        fl = np.empty((left.size, p))
        on_grid = left >= 0
        fl[on_grid] = table[left[on_grid]]
        if k:
            fl[~on_grid] = trig_values(jt[-left[~on_grid] - 1], p)
            out[b] = cont @ fl + (jumps[source < 0]) @ trig_values(jt, p)
        else:
            out[b] = cont @ fl
        jpos += k
        npos += n_steps + k
    return out
