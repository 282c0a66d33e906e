"""Continuous-time regression ``dy = sum theta_j phi_j(t) dt + d xi_t`` on ``[0, n]``.

The LSE is ``theta_hat_j = n^{-1} int_0^n phi_j dy = theta_j + n^{-1} I_n(phi_j)``
(orthonormality of the basis over whole periods), so the observation path
is never materialised; only the noise integrals are simulated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .condgauss import GridResult, check_grid, paired_loss_rows, reports_from_moments, shrink_estimate
from .errors import PreconditionError
from .mc import Moments
from .oulevy import DEFAULT_STEP, NoiseParams, SimulatedPath, TrigBasis, simulate_basis_integrals, stochastic_integral
from .special import gamma_p

A_STAR_MODES = ("scaled", "unscaled")


@dataclass(frozen=True)
class RegressionExperiment:
    theta: np.ndarray
    basis: TrigBasis
    noise: NoiseParams
    n: int
    d: float
    trials: int
    seed: int
    step: float = DEFAULT_STEP
    workers: int = field(default=1, compare=False)

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        object.__setattr__(self, "theta", theta)
        if theta.size != self.basis.p:
            raise PreconditionError(f"theta has {theta.size} entries, basis has {self.basis.p}")
        if self.basis.p < 2:
            raise PreconditionError("p must be >= 2")
        if int(self.n) != self.n or self.n < 1:
            raise PreconditionError(f"n must be a positive integer, got {self.n}")
        if np.linalg.norm(theta) > self.d * (1.0 + 1e-12):
            raise PreconditionError("theta lies outside the ball of radius d")

    @property
    def p(self) -> int:
        return self.basis.p


def lse(path: SimulatedPath, basis: TrigBasis, theta, n: float) -> np.ndarray:
    """LSE from a simulated noise path: ``theta + I_n(phi) / n``."""
    theta = np.asarray(theta, dtype=float)
    noise = np.array([stochastic_integral(path, basis.function(j)) for j in range(1, basis.p + 1)])
    return theta + noise / n


def regression_shrinkage(p: int, n: float, rho1: float, gamma: float) -> float:
    """``rho1^2 (p - 1) gamma_p / n``."""
    if not rho1 > 0:
        raise PreconditionError("rho1 must be positive")
    if p < 2 or n < 1:
        raise PreconditionError("need p >= 2 and n >= 1")
    return rho1**2 * (p - 1) * gamma / n


def improved_estimate_thm31(theta_hat, p: int, n: float, rho1: float, gamma: float) -> np.ndarray:
    """``(1 - rho1^2 (p-1) gamma_p / (n ||theta_hat||)) theta_hat``."""
    return shrink_estimate(theta_hat, regression_shrinkage(p, n, rho1, gamma))


def regression_a_star(p: int, noise: NoiseParams, n: float, mode: str = "scaled") -> float:
    """Eigenvalue bound fed to the constant: ``3 p rho_star / n`` (scaled) or ``3 p rho_star``."""
    if mode not in A_STAR_MODES:
        raise PreconditionError(f"a_star mode must be one of {A_STAR_MODES}")
    bound = 3.0 * p * noise.rho_star
    return bound / n if mode == "scaled" else bound


@dataclass(frozen=True)
class RegressionRiskResult:
    grid: GridResult
    gamma_p: float
    c: float
    a_star: float
    a_star_mode: str

    @property
    def passed(self) -> bool:
        return all(r.within_bound and r.dominates for r in self.grid.reports)


def mc_risk_thm31(
    exp: RegressionExperiment,
    theta_grid,
    a_star_mode: str = "scaled",
    backend: str | None = None,
) -> RegressionRiskResult:
    """CRN-paired risks of the LSE and the improved estimator over ``theta_grid``.

    One noise path per trial serves every grid point and both estimators.
    """
    if exp.trials < 2:
        raise PreconditionError("need at least two trials")
    thetas = check_grid(theta_grid, exp.d, exp.p)
    a_star = regression_a_star(exp.p, exp.noise, exp.n, a_star_mode)
    gam = gamma_p(exp.p, exp.d, a_star)
    c = regression_shrinkage(exp.p, exp.n, exp.noise.rho1, gam)
    ints = simulate_basis_integrals(
        exp.noise, exp.p, exp.n, exp.trials, exp.seed, exp.step, workers=exp.workers, backend=backend
    )
    rows = paired_loss_rows(ints / exp.n, thetas, lambda y: shrink_estimate(y, c))
    grid = reports_from_moments(Moments.of(rows), thetas, -(c**2))
    return RegressionRiskResult(grid, gam, c, a_star, a_star_mode)
