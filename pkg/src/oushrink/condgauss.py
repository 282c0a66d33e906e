"""Shrinkage estimation of the mean of a conditionally Gaussian vector.

Observation model ``Y = theta + xi`` with ``xi | G ~ N_p(0, D(G))``.  The
covariance is either a fixed SPD matrix or a sampler that draws a fresh
realisation per trial.  The estimators compared are

* the LSE ``Y`` itself,
* the shrinkage estimator ``(1 - c / ||Y||) Y``,
* the James-Stein comparator ``(1 - c / ||Y||^2) Y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import ModelError, PreconditionError
from .mc import Moments, mc_moments
from .special import gamma_p

MIN_TRIALS = 1000
CovSampler = Callable[[np.random.Generator, int], np.ndarray]


def _check_spd(cov: np.ndarray, lambda_star: float | None) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.ndim < 2 or cov.shape[-1] != cov.shape[-2]:
        raise ModelError(f"covariance must be square, got shape {cov.shape}")
    if not np.allclose(cov, np.swapaxes(cov, -1, -2), rtol=1e-12, atol=1e-12):
        raise ModelError("covariance is not symmetric")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ModelError("covariance is not positive definite") from exc
    if lambda_star is not None:
        lmin = np.linalg.eigvalsh(cov)[..., 0]
        bad = lmin < lambda_star * (1.0 - 1e-12)
        if np.any(bad):
            worst = float(np.min(lmin))
            raise ModelError(f"minimal eigenvalue {worst:.6g} below declared lambda_star {lambda_star:.6g}")
    return chol


@dataclass(frozen=True)
class CondGaussModel:
    """``Y = theta + xi`` with fixed covariance ``cov`` or random covariance from ``sampler``.

    ``sampler(rng, size)`` must return an array of shape ``(size, p, p)``.
    ``lambda_star``/``a_star`` are the declared eigenvalue bounds; the lower
    one is enforced on every covariance realisation.
    """

    theta: np.ndarray
    cov: np.ndarray | None = None
    sampler: CovSampler | None = None
    lambda_star: float | None = None
    a_star: float | None = None
    _chol: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if theta.ndim != 1:
            raise ModelError("theta must be a vector")
        object.__setattr__(self, "theta", theta)
        if (self.cov is None) == (self.sampler is None):
            raise ModelError("exactly one of cov and sampler must be given")
        if self.lambda_star is not None and not self.lambda_star > 0:
            raise ModelError("lambda_star must be positive")
        if self.cov is not None:
            cov = np.asarray(self.cov, dtype=float)
            if cov.shape != (theta.size, theta.size):
                raise ModelError(f"covariance shape {cov.shape} does not match p = {theta.size}")
            object.__setattr__(self, "cov", cov)
            object.__setattr__(self, "_chol", _check_spd(cov, self.lambda_star))

    @property
    def p(self) -> int:
        return self.theta.size

    def with_theta(self, theta) -> "CondGaussModel":
        return replace(self, theta=np.asarray(theta, dtype=float), _chol=None)

    def noise(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``size`` noise vectors; returns ``(xi, D)`` with ``D`` of shape ``(p, p)`` or ``(size, p, p)``."""
        if self.cov is not None:
            z = rng.standard_normal((size, self.p))
            return z @ self._chol.T, self.cov
        covs = np.asarray(self.sampler(rng, size), dtype=float)
        if covs.shape != (size, self.p, self.p):
            raise ModelError(f"sampler returned shape {covs.shape}, expected {(size, self.p, self.p)}")
        chol = _check_spd(covs, self.lambda_star)
        z = rng.standard_normal((size, self.p))
        return np.einsum("nij,nj->ni", chol, z), covs


def sample_observation(model: CondGaussModel, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """One draw of ``(Y, D)``."""
    xi, cov = model.noise(rng, 1)
    return model.theta + xi[0], cov if cov.ndim == 2 else cov[0]


def spiked_sampler(p: int, lambda_star: float, spike_mean: float) -> CovSampler:
    """Random covariance ``lambda_star I + s u u'`` with ``s ~ Exp(spike_mean)``, ``u`` uniform on the sphere.

    ``lambda_min = lambda_star`` and ``E lambda_max = lambda_star + spike_mean``.
    """

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.standard_normal((size, p))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        s = rng.exponential(spike_mean, size)
        return lambda_star * np.eye(p) + s[:, None, None] * u[:, :, None] * u[:, None, :]

    return draw


def point_mass_sampler(cov: np.ndarray) -> CovSampler:
    """Sampler that always returns ``cov``."""
    cov = np.asarray(cov, dtype=float)
    return lambda rng, size: np.broadcast_to(cov, (size,) + cov.shape).copy()


# -- estimators --------------------------------------------------------------


def _scale(y: np.ndarray, factor_of_norm: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    norm = np.linalg.norm(y, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(norm > 0, factor_of_norm(norm), 0.0)
    return factor * y


def shrink_estimate(y, c: float) -> np.ndarray:
    """``(1 - c/||Y||) Y`` along the last axis; zero vector when ``||Y|| = 0``.

    The factor is not clipped at zero.
    """
    if c < 0:
        raise PreconditionError(f"shrinkage constant must be nonnegative, got {c}")
    return _scale(y, lambda r: 1.0 - c / r)


def james_stein_estimate(y, c: float | None = None) -> np.ndarray:
    """``(1 - c/||Y||^2) Y``; ``c`` defaults to ``p - 2``."""
    y = np.asarray(y, dtype=float)
    if c is None:
        c = y.shape[-1] - 2.0
    if c < 0:
        raise PreconditionError(f"shrinkage constant must be nonnegative, got {c}")
    return _scale(y, lambda r: 1.0 - c / r**2)


def ls_estimate(y) -> np.ndarray:
    return np.array(y, dtype=float)


ESTIMATORS = {
    "lse": lambda y, c: ls_estimate(y),
    "shrink": shrink_estimate,
    "js": james_stein_estimate,
}


# -- constants ---------------------------------------------------------------


def optimal_c_theorem21(p: int, lambda_star: float, gamma_p: float) -> float:
    """``(p - 1) lambda_star gamma_p``."""
    if p < 2:
        raise PreconditionError(f"p must be >= 2, got {p}")
    if not lambda_star > 0 or not gamma_p > 0:
        raise PreconditionError("lambda_star and gamma_p must be positive")
    return (p - 1) * lambda_star * gamma_p


def risk_difference_bound(p: int, lambda_star: float, gamma_p: float) -> float:
    """Upper bound ``-[(p - 1) lambda_star gamma_p]^2`` on the risk difference."""
    return -optimal_c_theorem21(p, lambda_star, gamma_p) ** 2


@dataclass(frozen=True)
class ShrinkageConfig:
    c: float
    d: float
    lambda_star: float
    a_star: float
    gamma_p: float

    @classmethod
    def optimal(cls, p: int, d: float, lambda_star: float, a_star: float) -> "ShrinkageConfig":
        g = gamma_p(p, d, a_star)
        return cls(optimal_c_theorem21(p, lambda_star, g), d, lambda_star, a_star, g)

    @property
    def bound(self) -> float:
        return -self.c**2


# -- Monte Carlo ---------------------------------------------------------------


@dataclass(frozen=True)
class RiskReport:
    estimator_name: str
    empirical_risk: float
    half_width: float
    trials: int
    seed: int
    theoretical_bound: float | None = None


def _check_trials(trials: int) -> None:
    if trials < MIN_TRIALS:
        raise PreconditionError(f"need at least {MIN_TRIALS} trials, got {trials}")


def mc_risk(
    estimator: str,
    model: CondGaussModel,
    trials: int,
    seed: int,
    c: float | None = None,
    workers: int = 1,
    theoretical_bound: float | None = None,
) -> RiskReport:
    """Empirical quadratic risk ``E ||estimate - theta||^2`` with a 3-sigma half-width."""
    _check_trials(trials)
    try:
        est = ESTIMATORS[estimator]
    except KeyError:
        raise PreconditionError(f"unknown estimator {estimator!r}; choose from {sorted(ESTIMATORS)}") from None
    if estimator == "shrink" and c is None:
        raise PreconditionError("the shrinkage estimator needs c")
    theta = model.theta

    def block(rng, n):
        xi, _ = model.noise(rng, n)
        err = est(theta + xi, c) - theta
        return np.einsum("ij,ij->i", err, err)

    m = mc_moments(block, trials, seed, workers)
    return RiskReport(estimator, float(m.mean[0]), float(m.half_width()[0]), trials, seed, theoretical_bound)


@dataclass(frozen=True)
class DeltaReport:
    """CRN-paired risks at one parameter value."""

    theta: np.ndarray
    risk_lse: float
    risk_lse_hw: float
    risk_shrink: float
    risk_shrink_hw: float
    delta: float
    delta_hw: float
    bound: float

    @property
    def within_bound(self) -> bool:
        return self.delta <= self.bound + self.delta_hw

    @property
    def dominates(self) -> bool:
        return self.delta + self.delta_hw < 0.0


@dataclass(frozen=True)
class GridResult:
    worst_delta: float
    reports: list[DeltaReport]

    @property
    def passed(self) -> bool:
        return all(r.within_bound and r.dominates for r in self.reports)


def paired_loss_rows(xi: np.ndarray, thetas: np.ndarray, shrinker: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Per-trial ``[lse loss, shrink loss_g..., delta_g...]`` for noise rows ``xi`` and grid ``thetas``.

    Every grid point and both estimators share the same noise row.
    """
    g = thetas.shape[0]
    lse = np.einsum("ij,ij->i", xi, xi)
    err = shrinker(thetas[:, None, :] + xi[None, :, :]) - thetas[:, None, :]
    shr = np.einsum("gij,gij->gi", err, err).T
    out = np.empty((xi.shape[0], 1 + 2 * g))
    out[:, 0] = lse
    out[:, 1 : 1 + g] = shr
    out[:, 1 + g :] = shr - lse[:, None]
    return out


def paired_delta_moments(
    noise: Callable[[np.random.Generator, int], np.ndarray],
    shrinker: Callable[[np.ndarray], np.ndarray],
    thetas: np.ndarray,
    trials: int,
    seed: int,
    workers: int = 1,
) -> Moments:
    """Moments of :func:`paired_loss_rows` with noise drawn block by block."""
    return mc_moments(lambda rng, n: paired_loss_rows(noise(rng, n), thetas, shrinker), trials, seed, workers)


def reports_from_moments(m: Moments, thetas: np.ndarray, bound: float) -> GridResult:
    g = thetas.shape[0]
    hw = m.half_width()
    reports = [
        DeltaReport(
            theta=thetas[k],
            risk_lse=float(m.mean[0]),
            risk_lse_hw=float(hw[0]),
            risk_shrink=float(m.mean[1 + k]),
            risk_shrink_hw=float(hw[1 + k]),
            delta=float(m.mean[1 + g + k]),
            delta_hw=float(hw[1 + g + k]),
            bound=bound,
        )
        for k in range(g)
    ]
    return GridResult(max(r.delta for r in reports), reports)


def check_grid(theta_grid, d: float, p: int) -> np.ndarray:
    thetas = np.atleast_2d(np.asarray(theta_grid, dtype=float))
    if thetas.shape[0] == 0 or thetas.shape[1] != p:
        raise PreconditionError(f"theta grid must have shape (k, {p}), got {thetas.shape}")
    norms = np.linalg.norm(thetas, axis=1)
    if np.any(norms > d * (1.0 + 1e-12)):
        raise PreconditionError(f"grid point with norm {norms.max():.6g} lies outside the ball of radius {d}")
    return thetas


def sup_delta_over_grid(
    model: CondGaussModel,
    config: ShrinkageConfig,
    theta_grid,
    trials: int,
    seed: int,
    workers: int = 1,
) -> GridResult:
    """Estimate ``Delta(theta) = R(shrink) - R(LSE)`` over ``theta_grid`` with common random numbers.

    The noise law is taken from ``model``; its own ``theta`` is ignored.
    """
    _check_trials(trials)
    thetas = check_grid(theta_grid, config.d, model.p)
    m = paired_delta_moments(
        lambda rng, n: model.noise(rng, n)[0],
        lambda y: shrink_estimate(y, config.c),
        thetas,
        trials,
        seed,
        workers,
    )
    return reports_from_moments(m, thetas, config.bound)


def ball_grid(p: int, d: float) -> np.ndarray:
    """Nine points in the closed ball of radius ``d``: the origin plus four directions at radii d/2 and d."""
    if p < 2:
        raise PreconditionError("p must be >= 2")
    e1 = np.zeros(p)
    e1[0] = 1.0
    ep = np.zeros(p)
    ep[-1] = -1.0
    ones = np.ones(p) / math.sqrt(p)
    alt = np.array([(-1.0) ** k for k in range(p)]) / math.sqrt(p)
    pts = [np.zeros(p)]
    for r in (0.5 * d, d):
        pts.extend(r * u for u in (e1, ones, alt, ep))
    return np.array(pts)


def ray_grid(p: int, norms: Sequence[float]) -> np.ndarray:
    """Points ``r * (1, ..., 1)/sqrt(p)`` for each radius ``r``."""
    u = np.ones(p) / math.sqrt(p)
    return np.array([r * u for r in norms])
