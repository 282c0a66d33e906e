"""Mean estimation under stationary Gaussian AR(1) noise with unknown coefficient ``|a| <= alpha``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .condgauss import GridResult, check_grid, paired_delta_moments, reports_from_moments, shrink_estimate
from .errors import DomainError, PreconditionError
from .special import gamma_p


@dataclass(frozen=True)
class Ar1Noise:
    a: float
    alpha: float
    p: int

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if abs(self.a) > self.alpha:
            raise DomainError(f"|a| = {abs(self.a)} exceeds alpha = {self.alpha}")
        if self.p < 1:
            raise DomainError("p must be positive")


def ar1_covariance(a: float, p: int) -> np.ndarray:
    """Stationary covariance ``a^{|i-j|} / (1 - a^2)``."""
    if not abs(a) < 1:
        raise DomainError(f"AR(1) coefficient must satisfy |a| < 1, got {a}")
    lag = np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    return np.power(float(a), lag) / (1.0 - a * a)


def simulate_ar1(noise: Ar1Noise, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """``xi_k = a xi_{k-1} + eps_k``, k = 1..p, started from the stationary law."""
    m = 1 if size is None else size
    a = noise.a
    prev = rng.standard_normal(m) / np.sqrt(1.0 - a * a)
    eps = rng.standard_normal((m, noise.p))
    out = np.empty((m, noise.p))
    for k in range(noise.p):
        prev = a * prev + eps[:, k]
        out[:, k] = prev
    return out[0] if size is None else out


def lambda_max_bound(alpha: float) -> float:
    """``1 / (1 - alpha)^2`` bounds the largest eigenvalue of every ``D(a)``, ``|a| <= alpha``."""
    if not 0 <= alpha < 1:
        raise DomainError(f"alpha must lie in [0, 1), got {alpha}")
    return 1.0 / (1.0 - alpha) ** 2


def ar1_shrinkage(p: int, alpha: float, gamma: float) -> float:
    """``(p - 1/(1-alpha)^2) gamma_p``; requires ``p > 1/(1-alpha)^2``."""
    margin = p - lambda_max_bound(alpha)
    if not margin > 0:
        raise PreconditionError(f"need p > 1/(1-alpha)^2 = {lambda_max_bound(alpha):g}, got p = {p}")
    return margin * gamma


def improved_estimate_prop41(y, p: int, alpha: float, gamma: float) -> np.ndarray:
    return shrink_estimate(y, ar1_shrinkage(p, alpha, gamma))


def ar1_gamma(p: int, alpha: float, d: float) -> float:
    """The constant evaluated with ``a_star = 1/(1-alpha)^2``."""
    return gamma_p(p, d, lambda_max_bound(alpha))


def eigen_sweep(p: int, alpha: float, points: int = 41) -> np.ndarray:
    """Rows ``(a, lambda_max, trace, trace - lambda_max)`` over an even grid of ``[-alpha, alpha]``."""
    rows = []
    for a in np.linspace(-alpha, alpha, points):
        ev = np.linalg.eigvalsh(ar1_covariance(a, p))
        tr = float(np.trace(ar1_covariance(a, p)))
        rows.append((a, ev[-1], tr, tr - ev[-1]))
    return np.array(rows)


@dataclass(frozen=True)
class Ar1RiskResult:
    a: float
    grid: GridResult
    gamma_p: float
    c: float

    @property
    def passed(self) -> bool:
        return all(r.within_bound and r.dominates for r in self.grid.reports)


def mc_risk_ar1(
    p: int,
    alpha: float,
    a: float,
    d: float,
    theta_grid,
    trials: int,
    seed: int,
    workers: int = 1,
) -> Ar1RiskResult:
    """CRN-paired risk differences for the improved estimator under AR(1) coefficient ``a``."""
    noise = Ar1Noise(a, alpha, p)
    if trials < 2:
        raise PreconditionError("need at least two trials")
    thetas = check_grid(theta_grid, d, p)
    gam = ar1_gamma(p, alpha, d)
    c = ar1_shrinkage(p, alpha, gam)
    m = paired_delta_moments(
        lambda rng, n: simulate_ar1(noise, rng, n),
        lambda y: shrink_estimate(y, c),
        thetas,
        trials,
        seed,
        workers,
    )
    return Ar1RiskResult(a, reports_from_moments(m, thetas, -(c**2)), gam, c)
