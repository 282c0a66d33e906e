"""Monte Carlo and quadrature checks of the stochastic-integral identities.

Each check yields :class:`CheckRow` records so the CLI and the acceptance
suite share one implementation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mc
from .oulevy import (
    DEFAULT_STEP,
    JumpRecord,
    NoiseParams,
    TrigBasis,
    check_lemma_54,
    check_lemma_55,
    conditional_covariance,
    sample_jumps,
    simulate_basis_integrals,
    tau_fg,
)


@dataclass(frozen=True)
class CheckRow:
    check: str
    a: float
    i: int
    j: int
    estimate: float
    reference: float
    half_width: float
    passed: bool
    note: str = ""


def _pairs(p: int):
    return [(i, j) for i in range(p) for j in range(i, p)]


def product_moments(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Means and 3-sigma half-widths of ``x_i x_j`` (i <= j) for zero-mean rows ``x``."""
    pairs = _pairs(x.shape[1])
    prods = np.stack([x[:, i] * x[:, j] for i, j in pairs], axis=1)
    m = mc.Moments.of(prods)
    return m.mean, m.half_width()


def verify_second_moments(
    params: NoiseParams,
    p: int,
    t: float,
    paths: int,
    seed: int,
    h: float = DEFAULT_STEP,
    workers: int = 1,
) -> list[CheckRow]:
    """Unconditional second moments of ``I_t(phi_i)`` against ``rho_star tau_{phi_i, phi_j}(t)``,
    plus the bound ``E I_t(phi_j)^2 <= 3 rho_star int_0^t phi_j^2``."""
    basis = TrigBasis(p)
    ints = simulate_basis_integrals(params, p, t, paths, seed, h, workers=workers)
    mean, hw = product_moments(ints)
    rows = []
    for k, (i, j) in enumerate(_pairs(p)):
        ref = params.rho_star * tau_fg(basis.function(i + 1), basis.function(j + 1), params.a, t)
        rows.append(CheckRow("second-moment", params.a, i + 1, j + 1, mean[k], ref, hw[k], abs(mean[k] - ref) <= hw[k]))
    for k, (i, j) in enumerate(_pairs(p)):
        if i != j:
            continue
        phi = basis.function(i + 1)
        bound = 3.0 * params.rho_star * tau_fg(phi, phi, 0.0, t)
        rows.append(CheckRow("second-moment-bound", params.a, i + 1, i + 1, mean[k], bound, hw[k], mean[k] - hw[k] <= bound))
    return rows


def verify_conditional_covariance(
    params: NoiseParams,
    p: int,
    n: float,
    paths: int,
    seed: int,
    h: float = DEFAULT_STEP,
    workers: int = 1,
    jump_times: np.ndarray | None = None,
) -> list[CheckRow]:
    """With jump times frozen: conditional mean zero of each integral and
    conditional covariance of ``zeta(n)`` against the quadrature formula."""
    basis = TrigBasis(p)
    if jump_times is None:
        jump_times = sample_jumps(params, n, mc.block_rng(seed, 2**31)).times
    jump_times = np.asarray(jump_times, dtype=float)
    record = JumpRecord(jump_times, np.zeros(jump_times.size))
    v = conditional_covariance(basis, params, record, n).matrix
    zeta = simulate_basis_integrals(params, p, n, paths, seed, h, jump_times=jump_times, workers=workers) / np.sqrt(n)
    note = "T=" + " ".join(f"{x:.12g}" for x in jump_times)
    m = mc.Moments.of(zeta)
    rows = [
        CheckRow("cond-mean", params.a, j + 1, 0, m.mean[j], 0.0, m.half_width()[j], abs(m.mean[j]) <= m.half_width()[j], note)
        for j in range(p)
    ]
    mean, hw = product_moments(zeta)
    for k, (i, j) in enumerate(_pairs(p)):
        rows.append(CheckRow("cond-covariance", params.a, i + 1, j + 1, mean[k], v[i, j], hw[k], abs(mean[k] - v[i, j]) <= hw[k], note))
    return rows


def verify_eigenvalue_floor(params: NoiseParams, p: int, n: float, configs: int, seed: int) -> CheckRow:
    """Smallest eigenvalue of ``V_n(G)`` over sampled jump configurations against ``rho1^2``."""
    basis = TrigBasis(p)
    rng = mc.block_rng(seed, 0)
    worst = None
    for _ in range(configs):
        res = check_lemma_54(conditional_covariance(basis, params, sample_jumps(params, n, rng), n), params)
        if worst is None or res.min_eigenvalue < worst.min_eigenvalue:
            worst = res
    note = "worst T=" + " ".join(f"{x:.12g}" for x in worst.jumps.times)
    ok = worst.min_eigenvalue >= worst.bound - 1e-6
    return CheckRow("eigen-floor", params.a, 0, 0, worst.min_eigenvalue, worst.bound, 0.0, ok, note)


def verify_mean_top_eigenvalue(params: NoiseParams, p: int, n: float, configs: int, seed: int) -> CheckRow:
    """Mean largest eigenvalue of ``V_n(G)`` against ``3 p rho_star``."""
    res = check_lemma_55(TrigBasis(p), params, n, configs, mc.block_rng(seed, 1))
    return CheckRow("mean-top-eigen", params.a, 0, 0, res.mean_lambda_max, res.bound, res.half_width, res.passed)
