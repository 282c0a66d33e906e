"""Quadrature building blocks.

Two families live here:

* :func:`adaptive_simpson` -- scalar adaptive Simpson rule with an absolute
  error target, used for the one-dimensional special-function integrals.
* Composite Gauss-Legendre panels (:class:`Panels`) with spectral cumulative
  integration, used where whole families of (possibly nested) integrals over
  a time interval are needed at once.  Accuracy is controlled by
  :func:`refine`, which halves the panel width until two successive results
  agree within the tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import legendre

DEFAULT_ORDER = 16


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_depth: int = 50,
) -> float:
    """Integrate ``f`` over ``[a, b]`` to absolute tolerance ``tol``.

    Uses the classical Richardson-corrected adaptive Simpson scheme with an
    explicit stack instead of recursion.
    """
    if b == a:
        return 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) * (flo + 4.0 * flm + fmid) / 6.0
        right = (hi - mid) * (fmid + 4.0 * frm + fhi) / 6.0
        err = left + right - s
        if depth >= max_depth or abs(err) <= 15.0 * eps:
            total += left + right + err / 15.0
        else:
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    return total


@lru_cache(maxsize=8)
def _rule(order: int):
    x, w = legendre.leggauss(order)
    # S[k, j] = int_{-1}^{x_k} l_j(s) ds for the Lagrange basis l_j on the nodes
    vander = legendre.legvander(x, order - 1)
    vint = np.empty_like(vander)
    for i in range(order):
        c = np.zeros(order)
        c[i] = 1.0
        vint[:, i] = legendre.legval(x, legendre.legint(c, lbnd=-1.0))
    smat = vint @ np.linalg.inv(vander)
    return x, w, smat


@dataclass(frozen=True)
class Panels:
    """Equal-width Gauss-Legendre panels covering ``[lo, hi]``."""

    edges: np.ndarray  # (P + 1,)
    nodes: np.ndarray  # (P, m)
    weights: np.ndarray  # (P, m)
    smat: np.ndarray  # (m, m) spectral integration matrix on [-1, 1]

    @classmethod
    def build(cls, lo: float, hi: float, width: float, order: int = DEFAULT_ORDER) -> "Panels":
        if hi < lo:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        count = max(1, int(math.ceil((hi - lo) / width - 1e-12)))
        edges = np.linspace(lo, hi, count + 1)
        x, w, smat = _rule(order)
        half = 0.5 * np.diff(edges)
        nodes = edges[:-1, None] + half[:, None] * (x[None, :] + 1.0)
        weights = half[:, None] * w[None, :]
        return cls(edges, nodes, weights, smat)

    @property
    def half_widths(self) -> np.ndarray:
        return 0.5 * np.diff(self.edges)

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Integral of sampled values of shape ``(P, m, ...)`` over the whole range."""
        w = self.weights.reshape(self.weights.shape + (1,) * (values.ndim - 2))
        return (values * w).sum(axis=(0, 1))

    def cumulative(self, values: np.ndarray) -> np.ndarray:
        """``int_lo^t g`` at every node, for samples ``g`` of shape ``(P, m, ...)``."""
        tail = values.shape[2:]
        flat = values.reshape(values.shape[0], values.shape[1], -1)
        half = self.half_widths[:, None, None]
        within = np.einsum("kj,pjr->pkr", self.smat, flat) * half
        panel_tot = (flat * self.weights[:, :, None]).sum(axis=1)
        starts = np.concatenate([np.zeros((1, flat.shape[2])), np.cumsum(panel_tot, axis=0)[:-1]])
        out = starts[:, None, :] + within
        return out.reshape(values.shape[:2] + tail)

    def decayed_cumulative(self, values: np.ndarray, rate: float) -> np.ndarray:
        """``D(t) = int_lo^t exp(rate (t - v)) g(v) dv`` at every node.

        Evaluated panel by panel so that only non-positive exponents of size at
        most ``|rate| * width`` appear; safe for ``rate <= 0`` on long ranges.
        """
        if rate == 0.0:
            return self.cumulative(values)
        tail = values.shape[2:]
        flat = values.reshape(values.shape[0], values.shape[1], -1)
        starts_t = self.edges[:-1]
        # h(v) = exp(-rate (v - p0)) g(v) on each panel
        shift = self.nodes - starts_t[:, None]
        h = flat * np.exp(-rate * shift)[:, :, None]
        half = self.half_widths[:, None, None]
        within = np.einsum("kj,pjr->pkr", self.smat, h) * half
        panel_h = (h * self.weights[:, :, None]).sum(axis=1)
        decay = np.exp(rate * np.diff(self.edges))
        start_vals = np.empty_like(panel_h)
        acc = np.zeros(flat.shape[2])
        for k in range(len(decay)):
            start_vals[k] = acc
            acc = decay[k] * (acc + panel_h[k])
        out = np.exp(rate * shift)[:, :, None] * (start_vals[:, None, :] + within)
        return out.reshape(values.shape[:2] + tail)


def refine(
    compute: Callable[[float], np.ndarray | float],
    width: float,
    tol: float,
    max_halvings: int = 10,
):
    """Halve the panel width until successive results agree within ``tol``.

    Returns the finer of the last two evaluations.
    """
    prev = np.asarray(compute(width))
    for _ in range(max_halvings):
        width *= 0.5
        cur = np.asarray(compute(width))
        if np.max(np.abs(cur - prev), initial=0.0) <= tol:
            return cur if cur.ndim else float(cur)
        prev = cur
    raise ArithmeticError(f"quadrature did not reach tolerance {tol} (panel width {width:g})")
