"""Ornstein-Uhlenbeck noise driven by Brownian motion plus compound Poisson jumps.

    d xi_t = a xi_t dt + du_t,    u_t = rho1 w_t + rho2 z_t,
    z_t = sum_{l <= N_t} Y_l,     N ~ Poisson(lambda),  Y_l ~ N(0, 1).

Paths are simulated with exact OU transitions between grid points and exact
jump insertion (jump times are merged into the grid).  Given the jump times,
the noise is Gaussian; :func:`conditional_covariance` evaluates the
conditional covariance of the normalised basis integrals
``zeta_j = n^{-1/2} int_0^n phi_j dxi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import mc
from ._kernels import get_basis_integrals
from ._kernels._fallback import innovation_variance, merge_jumps, path_values, trig_values
from .errors import DomainError, PreconditionError
from .quadrature import Panels, refine

DEFAULT_STEP = 1e-3
PATH_BLOCK = 256
Fn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class NoiseParams:
    a: float
    rho1: float
    rho2: float
    lam: float

    def __post_init__(self):
        if self.a > 0:
            raise DomainError(f"mean-reversion a must be <= 0, got {self.a}")
        if not self.rho1 > 0:
            raise DomainError(f"rho1 must be positive, got {self.rho1}")
        if self.rho2 < 0:
            raise DomainError(f"rho2 must be nonnegative, got {self.rho2}")
        if not self.lam > 0:
            raise DomainError(f"jump intensity must be positive, got {self.lam}")

    @property
    def rho_star(self) -> float:
        return self.rho1**2 + self.lam * self.rho2**2


@dataclass(frozen=True)
class TrigBasis:
    """phi_1 = 1, phi_{2k} = sqrt2 cos(2 pi k t), phi_{2k+1} = sqrt2 sin(2 pi k t)."""

    p: int

    def __post_init__(self):
        if self.p < 1:
            raise DomainError("basis needs at least one function")

    def __call__(self, t) -> np.ndarray:
        return trig_values(t, self.p)

    def function(self, j: int) -> Fn:
        """The single function phi_j (1-based)."""
        if not 1 <= j <= self.p:
            raise IndexError(f"basis index {j} outside 1..{self.p}")
        return lambda t: trig_values(t, j)[..., j - 1]

    @property
    def max_frequency(self) -> int:
        return self.p // 2


@dataclass(frozen=True)
class JumpRecord:
    """Jump times of the Poisson process on ``[0, n]`` and their marks."""

    times: np.ndarray
    marks: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        y = np.asarray(self.marks, dtype=float).ravel()
        if t.shape != y.shape:
            raise ValueError("times and marks must have the same length")
        if t.size and (t[0] <= 0 or np.any(np.diff(t) <= 0)):
            raise ValueError("jump times must be positive and strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "marks", y)

    @classmethod
    def empty(cls) -> "JumpRecord":
        return cls(np.empty(0), np.empty(0))

    @property
    def count(self) -> int:
        return self.times.size


def sample_jumps(params: NoiseParams, n: float, rng: np.random.Generator) -> JumpRecord:
    """Poisson(lambda n) jump count, sorted uniform times on [0, n], standard normal marks."""
    if n <= 0:
        raise PreconditionError(f"horizon must be positive, got {n}")
    k = rng.poisson(params.lam * n)
    times = np.sort(rng.uniform(0.0, n, k))
    return JumpRecord(times, rng.standard_normal(k))


def _grid_steps(n: float, h: float) -> tuple[int, float]:
    if not 0 < h <= 1e-2:
        raise PreconditionError(f"grid step must lie in (0, 1e-2], got {h}")
    steps = max(1, int(round(n / h)))
    return steps, n / steps


@dataclass(frozen=True)
class SimulatedPath:
    """One noise trajectory on a grid that contains every jump time.

    ``xi`` is right-continuous: at a jump time it already includes the jump,
    whose size is recorded in ``jump_sizes`` (zero elsewhere).
    ``u_increments[m]`` is the increment of ``u`` over cell ``m``.
    """

    grid: np.ndarray
    xi: np.ndarray
    u_increments: np.ndarray
    jump_sizes: np.ndarray
    jumps: JumpRecord
    params: NoiseParams = field(repr=False)

    @property
    def horizon(self) -> float:
        return float(self.grid[-1])


def simulate_path(
    params: NoiseParams,
    n: float,
    h: float = DEFAULT_STEP,
    rng: np.random.Generator | None = None,
    jumps: JumpRecord | None = None,
    resample_marks: bool = True,
) -> SimulatedPath:
    """Simulate ``xi`` on ``[0, n]`` with ``xi_0 = 0``.

    When ``jumps`` is given its times are reused, which conditions on the
    Poisson process.  The marks are independent of that sigma-algebra, so by
    default they are redrawn; pass ``resample_marks=False`` to replay them.
    """
    if rng is None:
        rng = np.random.default_rng()
    steps, step = _grid_steps(n, h)
    if jumps is None:
        jumps = sample_jumps(params, n, rng)
    elif resample_marks:
        jumps = JumpRecord(jumps.times, rng.standard_normal(jumps.count))
    if jumps.count and jumps.times[-1] >= n:
        raise PreconditionError("jump times must lie inside (0, n)")
    uniform = np.arange(steps + 1) * step
    points, source = merge_jumps(uniform, jumps.times)
    z = rng.standard_normal(points.size - 1)
    xi, jump_sizes = path_values(points, source, params.a, params.rho1, params.rho2, jumps.marks, z)
    # Brownian increment drawn jointly with the OU innovation of each cell.
    delta = np.diff(points)
    v = innovation_variance(params.a, delta)
    cov = delta if params.a == 0 else np.expm1(params.a * delta) / params.a
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = np.where(v > 0, cov / v, 0.0)
        resid = np.clip(delta - beta * cov, 0.0, None)
    dw = beta * np.sqrt(v) * z + np.sqrt(resid) * rng.standard_normal(delta.size)
    du = params.rho1 * dw + jump_sizes[1:]
    return SimulatedPath(points, xi, du, jump_sizes, jumps, params)


def _values(f: Fn, t: np.ndarray) -> np.ndarray:
    return np.broadcast_to(np.asarray(f(t), dtype=float), np.shape(t))


def stochastic_integral(path: SimulatedPath, f: Fn) -> float:
    """Left-point Ito sum ``sum f(t_k)(xi_{t_{k+1}} - xi_{t_k})``.

    Each jump is weighted by ``f`` at the jump time itself; the continuous
    part carries an O(h) discretisation bias.
    """
    fv = _values(f, path.grid)
    cont = np.diff(path.xi) - path.jump_sizes[1:]
    return float(fv[:-1] @ cont + fv @ path.jump_sizes)


# -- deterministic transforms --------------------------------------------------

_WIDTH = 0.25


def _eps_integrand(f: Fn, a: float):
    return lambda v: _values(f, v) * (1.0 + np.exp(2.0 * a * v))


def epsilon_f(f: Fn, a: float, t: float, tol: float = 1e-8) -> float:
    """``a int_0^t exp(a (t - v)) f(v) (1 + exp(2 a v)) dv``."""
    if a == 0.0 or t == 0.0:
        return 0.0
    g = _eps_integrand(f, a)

    def compute(width):
        pan = Panels.build(0.0, t, width)
        return a * pan.integrate((np.exp(a * (t - pan.nodes)) * g(pan.nodes))[:, :, None])[0]

    return float(refine(compute, _WIDTH, tol))


def _epsilon_at_nodes(pan: Panels, values: np.ndarray, a: float) -> np.ndarray:
    """epsilon_f at every node for samples ``values`` of f (shape ``(P, m, k)``)."""
    if a == 0.0:
        return np.zeros_like(values)
    weight = (1.0 + np.exp(2.0 * a * pan.nodes))[:, :, None]
    return a * pan.decayed_cumulative(values * weight, a)


def tau_fg(f: Fn, g: Fn, a: float, t: float, tol: float = 1e-7) -> float:
    """``1/2 int_0^t (2 f g + f eps_g + eps_f g) ds``."""

    def compute(width):
        pan = Panels.build(0.0, t, width)
        vals = np.stack([_values(f, pan.nodes), _values(g, pan.nodes)], axis=-1)
        eps = _epsilon_at_nodes(pan, vals, a)
        fv, gv = vals[..., 0], vals[..., 1]
        body = 2.0 * fv * gv + fv * eps[..., 1] + eps[..., 0] * gv
        return 0.5 * pan.integrate(body[:, :, None])[0]

    return float(refine(compute, _WIDTH, tol))


def L_transform(f: Fn, a: float, x: float, z: float, tol: float = 1e-8) -> float:
    """``a exp(a x) (f(z) + a int_0^x exp(a v) f(v + z) dv)``."""
    if x < 0 or z < 0:
        raise PreconditionError("L_transform needs x >= 0 and z >= 0")
    if a == 0.0:
        return 0.0
    fz = float(_values(f, np.asarray(z)))
    if x == 0.0:
        return a * fz

    def compute(width):
        pan = Panels.build(0.0, x, width)
        return pan.integrate((np.exp(a * pan.nodes) * _values(f, pan.nodes + z))[:, :, None])[0]

    return a * math.exp(a * x) * (fz + a * float(refine(compute, _WIDTH, tol)))


def second_moment_unconditional(f: Fn, g: Fn, params: NoiseParams, t: float) -> float:
    """``E I_t(f) I_t(g) = rho_star tau_{f,g}(t)``."""
    return params.rho_star * tau_fg(f, g, params.a, t)


# -- conditional covariance ------------------------------------------------------


@dataclass(frozen=True)
class ConditionalCovariance:
    matrix: np.ndarray
    n: float
    basis: TrigBasis
    jumps: JumpRecord
    params: NoiseParams = field(repr=False)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def _start_width(basis: TrigBasis) -> float:
    return 1.0 / (4.0 * max(1, basis.max_frequency))


def _brownian_part(basis: TrigBasis, a: float, n: float, width: float) -> tuple[np.ndarray, np.ndarray]:
    """``(int phi phi', int (phi eps_phi' + eps_phi phi'))`` over [0, n]."""
    pan = Panels.build(0.0, n, width)
    phi = basis(pan.nodes)
    gram = pan.integrate(phi[..., :, None] * phi[..., None, :])
    if a == 0.0:
        return gram, np.zeros_like(gram)
    eps = _epsilon_at_nodes(pan, phi, a)
    cross = pan.integrate(phi[..., :, None] * eps[..., None, :])
    return gram, cross + cross.T


def _jump_part(basis: TrigBasis, a: float, n: float, times: np.ndarray, width: float) -> np.ndarray:
    """``sum_l [phi(T_l) phi(T_l)' + int_{T_l}^n (phi L_phi' + L_phi phi')(t - T_l, T_l) dt]``."""
    p = basis.p
    total = np.zeros((p, p))
    for t_l in times[times <= n]:
        ft = basis(t_l)
        total += np.outer(ft, ft)
        if a == 0.0 or t_l >= n:
            continue
        pan = Panels.build(float(t_l), n, width)
        phi = basis(pan.nodes)
        decay = np.exp(a * (pan.nodes - t_l))[:, :, None]
        amp = ft + a * pan.cumulative(decay * phi)
        ell = a * decay * amp
        m = pan.integrate(phi[..., :, None] * ell[..., None, :])
        total += m + m.T
    return total


def conditional_covariance(
    basis: TrigBasis,
    params: NoiseParams,
    jumps: JumpRecord,
    n: float,
    tol: float = 1e-7,
) -> ConditionalCovariance:
    """Covariance of ``zeta(n)`` given the jump times.

    v_ij = rho1^2/n int phi_i phi_j + rho1^2/(2n) int (phi_i eps_j + phi_j eps_i)
         + rho2^2/n sum_l phi_i(T_l) phi_j(T_l)
         + rho2^2/n sum_l int_{T_l}^n (phi_i L_j + phi_j L_i)(t - T_l, T_l) dt
    """
    r1, r2 = params.rho1**2, params.rho2**2

    def compute(width):
        gram, cross = _brownian_part(basis, params.a, n, width)
        mat = r1 / n * gram + r1 / (2.0 * n) * cross
        if r2 > 0 and jumps.count:
            mat = mat + r2 / n * _jump_part(basis, params.a, n, jumps.times, width)
        return mat

    mat = refine(compute, _start_width(basis), tol)
    mat = 0.5 * (mat + mat.T)
    return ConditionalCovariance(mat, n, basis, jumps, params)


@dataclass(frozen=True)
class EigenFloorResult:
    passed: bool
    min_eigenvalue: float
    bound: float
    jumps: JumpRecord


def check_lemma_54(cov: ConditionalCovariance, params: NoiseParams, tol: float = 1e-6) -> EigenFloorResult:
    """Is ``lambda_min(V_n(G)) >= rho1^2`` (up to ``tol``)?  Failures carry the jump times."""
    lmin = float(cov.eigenvalues[0])
    bound = params.rho1**2
    return EigenFloorResult(lmin >= bound - tol, lmin, bound, cov.jumps)


@dataclass(frozen=True)
class TopEigenResult:
    passed: bool
    mean_lambda_max: float
    half_width: float
    bound: float
    samples: int


def check_lemma_55(
    basis: TrigBasis,
    params: NoiseParams,
    n: float,
    samples: int,
    rng: np.random.Generator,
) -> TopEigenResult:
    """Average ``lambda_max(V_n(G))`` over sampled jump configurations against ``3 p rho_star``."""
    if samples < 2:
        raise PreconditionError("need at least two samples")
    lmax = np.array(
        [conditional_covariance(basis, params, sample_jumps(params, n, rng), n).eigenvalues[-1] for _ in range(samples)]
    )
    m = mc.Moments.of(lmax)
    mean, hw = float(m.mean[0]), float(m.half_width()[0])
    bound = 3.0 * basis.p * params.rho_star
    return TopEigenResult(mean - hw <= bound, mean, hw, bound, samples)


# -- Monte Carlo over many paths -------------------------------------------------


def _block_draws(rng, params: NoiseParams, n: float, steps: int, size: int, fixed_times):
    if fixed_times is None:
        counts = rng.poisson(params.lam * n, size).astype(np.int64)
        times = rng.uniform(0.0, n, int(counts.sum()))
        owner = np.repeat(np.arange(size), counts)
        times = times[np.lexsort((times, owner))]
    else:
        counts = np.full(size, fixed_times.size, dtype=np.int64)
        times = np.tile(fixed_times, size)
    total = int(counts.sum())
    marks = rng.standard_normal(total)
    normals = rng.standard_normal(size * steps + total)
    return counts, times, marks, normals


def simulate_basis_integrals(
    params: NoiseParams,
    p: int,
    n: float,
    paths: int,
    seed: int,
    h: float = DEFAULT_STEP,
    jump_times: np.ndarray | None = None,
    workers: int = 1,
    backend: str | None = None,
) -> np.ndarray:
    """``I_n(phi_j)``, j = 1..p, for ``paths`` independent paths; shape ``(paths, p)``.

    With ``jump_times`` the Poisson times are frozen (conditioning on them)
    and only the Brownian part and the marks are redrawn.
    """
    steps, step = _grid_steps(n, h)
    fixed = None
    if jump_times is not None:
        fixed = np.asarray(jump_times, dtype=float)
        if fixed.size and (fixed[0] <= 0 or fixed[-1] >= n or np.any(np.diff(fixed) <= 0)):
            raise PreconditionError("frozen jump times must be strictly increasing inside (0, n)")
    table = np.ascontiguousarray(trig_values(np.arange(steps) * step, p))
    kernel = get_basis_integrals(backend)

    def block(rng, size):
        counts, times, marks, normals = _block_draws(rng, params, n, steps, size, fixed)
        return kernel(steps, step, params.a, params.rho1, params.rho2, table, counts, times, marks, normals)

    parts = mc.run_blocks(block, paths, seed, workers, PATH_BLOCK)
    return np.concatenate(parts, axis=0)
