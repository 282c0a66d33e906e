import math

import numpy as np
import pytest
from oracles import jacobi_eigenvalues, kernel_covariance, midpoint

from oushrink.errors import DomainError, PreconditionError
from oushrink.oulevy import (
    JumpRecord,
    NoiseParams,
    TrigBasis,
    L_transform,
    check_lemma_54,
    check_lemma_55,
    conditional_covariance,
    epsilon_f,
    sample_jumps,
    second_moment_unconditional,
    simulate_basis_integrals,
    simulate_path,
    stochastic_integral,
    tau_fg,
)


def test_noise_params_validation():
    with pytest.raises(DomainError):
        NoiseParams(0.5, 1.0, 0.5, 1.0)
    with pytest.raises(DomainError):
        NoiseParams(-1.0, 0.0, 0.5, 1.0)
    with pytest.raises(DomainError):
        NoiseParams(-1.0, 1.0, -0.5, 1.0)
    with pytest.raises(DomainError):
        NoiseParams(-1.0, 1.0, 0.5, 0.0)
    assert NoiseParams(-1.0, 2.0, 0.5, 4.0).rho_star == pytest.approx(5.0)


def test_basis_orthonormal_over_whole_periods():
    b = TrigBasis(5)
    t = (np.arange(40_000) + 0.5) / 10_000
    phi = b(t)
    gram = phi.T @ phi / 10_000
    assert np.allclose(gram, 4 * np.eye(5), atol=1e-9)
    assert b.function(3)(0.125) == pytest.approx(math.sqrt(2) * math.sin(2 * math.pi * 0.125))
    with pytest.raises(IndexError):
        b.function(6)


def test_jump_record_validation():
    with pytest.raises(ValueError):
        JumpRecord(np.array([0.5, 0.2]), np.zeros(2))
    with pytest.raises(ValueError):
        JumpRecord(np.array([0.5]), np.zeros(2))
    assert JumpRecord.empty().count == 0


def test_sample_jumps_poisson_count():
    params = NoiseParams(-1.0, 1.0, 1.0, 2.0)
    rng = np.random.default_rng(0)
    counts = [sample_jumps(params, 3.0, rng).count for _ in range(4000)]
    assert np.mean(counts) == pytest.approx(6.0, abs=4 * math.sqrt(6.0 / 4000))


@pytest.mark.parametrize("a", [-0.3, -1.0, -2.5])
def test_epsilon_constant_closed_form(a):
    # f = 1 gives exp(2 a t) - 1
    assert epsilon_f(lambda t: np.ones_like(t), a, 2.0) == pytest.approx(math.expm1(2 * a * 2.0), abs=1e-9)


@pytest.mark.parametrize("a", [-0.5, -2.0])
def test_epsilon_against_midpoint(a):
    f = lambda v: np.sqrt(2) * np.cos(2 * np.pi * v)
    t = 3.0
    ref = a * midpoint(lambda v: np.exp(a * (t - v)) * f(v) * (1 + np.exp(2 * a * v)), 0.0, t, 1e-5)
    assert epsilon_f(f, a, t) == pytest.approx(ref, abs=1e-8)
    assert epsilon_f(f, 0.0, t) == 0.0


@pytest.mark.parametrize("a", [0.0, -1.0])
def test_tau_against_midpoint(a):
    f = lambda v: np.sqrt(2) * np.sin(2 * np.pi * v)
    g = lambda v: np.ones_like(v)
    t = 2.0
    h = 2e-4
    s = (np.arange(int(t / h)) + 0.5) * h

    def eps(fun):
        if a == 0.0:
            return np.zeros_like(s)
        w = fun(s) * (1 + np.exp(2 * a * s))
        # cumulative midpoint of e^{a(s - v)} w(v) over v < s
        acc = np.cumsum(np.exp(-a * s) * w) * h - 0.5 * h * np.exp(-a * s) * w
        return a * np.exp(a * s) * acc

    ref = 0.5 * np.sum(2 * f(s) * g(s) + f(s) * eps(g) + eps(f) * g(s)) * h
    assert tau_fg(f, g, a, t) == pytest.approx(ref, abs=1e-6)


@pytest.mark.parametrize("a", [-0.4, -1.0, -3.0])
def test_tau_constant_is_ou_variance(a):
    one = lambda v: np.ones_like(v)
    assert tau_fg(one, one, a, 4.0) == pytest.approx(math.expm1(2 * a * 4.0) / (2 * a), rel=1e-9)


def test_L_transform_closed_form():
    one = lambda v: np.ones_like(v)
    for x in (0.0, 0.3, 1.7):
        assert L_transform(one, -1.0, x, 0.4) == pytest.approx(-math.exp(-2 * x), rel=1e-10)
    assert L_transform(one, 0.0, 1.0, 1.0) == 0.0
    with pytest.raises(PreconditionError):
        L_transform(one, -1.0, -0.1, 0.0)


def test_simulate_path_contains_jumps_and_integrates_constant():
    params = NoiseParams(-0.8, 1.0, 0.7, 2.0)
    path = simulate_path(params, 3.0, 1e-2, np.random.default_rng(2))
    for t in path.jumps.times:
        assert np.any(path.grid == t)
    assert path.horizon == pytest.approx(3.0)
    assert path.xi[0] == 0.0
    # the integral of the constant basis function telescopes to xi_n
    assert stochastic_integral(path, lambda t: np.ones_like(t)) == pytest.approx(path.xi[-1], abs=1e-12)


def test_path_satisfies_integrated_equation():
    # xi_n = a int xi dt + u_n, up to O(h) from the left-point sum
    params = NoiseParams(-1.5, 1.0, 0.5, 1.0)
    path = simulate_path(params, 2.0, 1e-4, np.random.default_rng(4))
    drift = params.a * np.sum(path.xi[:-1] * np.diff(path.grid))
    assert path.xi[-1] == pytest.approx(drift + path.u_increments.sum(), abs=0.02)


@pytest.mark.parametrize("a", [0.0, -1.0])
def test_terminal_variance(a):
    params = NoiseParams(a, 1.0, 0.6, 1.5)
    t = 2.0
    rng = np.random.default_rng(10)
    x = np.array([simulate_path(params, t, 1e-2, rng).xi[-1] for _ in range(3000)])
    target = params.rho_star * (t if a == 0 else math.expm1(2 * a * t) / (2 * a))
    se = target * math.sqrt(2 / x.size) * 1.5  # jumps fatten the tails a little
    assert abs(np.mean(x**2) - target) < 4 * se


def test_second_moment_formula_with_simulation():
    params = NoiseParams(-1.0, 1.0, 0.7, 1.0)
    b = TrigBasis(3)
    ints = simulate_basis_integrals(params, 3, 3.0, 20_000, 12, 1e-3)
    for i in range(3):
        ref = second_moment_unconditional(b.function(i + 1), b.function(i + 1), params, 3.0)
        x = ints[:, i] ** 2
        assert abs(x.mean() - ref) < 4 * x.std() / math.sqrt(x.size)


JUMPS = [np.array([]), np.array([0.7]), np.array([0.7, 2.31, 4.05]), np.array([0.5, 1.0, 2.5, 4.999])]


@pytest.mark.parametrize("a", [0.0, -0.5, -2.0])
@pytest.mark.parametrize("times", JUMPS, ids=["none", "one", "three", "edges"])
def test_conditional_covariance_matches_kernel_oracle(a, times):
    params = NoiseParams(a, 1.0, 0.7, 1.0)
    cov = conditional_covariance(TrigBasis(3), params, JumpRecord(times, np.zeros(times.size)), 5.0)
    ref = kernel_covariance(3, a, 1.0, 0.7, times, 5.0)
    assert np.allclose(cov.matrix, ref, atol=5e-8)
    assert np.allclose(cov.eigenvalues, jacobi_eigenvalues(cov.matrix), atol=1e-12)


def test_conditional_covariance_identity_without_jumps_or_drift():
    params = NoiseParams(0.0, 1.3, 0.0, 1.0)
    cov = conditional_covariance(TrigBasis(5), params, JumpRecord.empty(), 4.0)
    assert np.allclose(cov.matrix, 1.69 * np.eye(5), atol=1e-12)


def test_conditional_covariance_higher_dimension():
    params = NoiseParams(-1.2, 0.8, 1.1, 1.0)
    times = np.array([0.3, 1.9, 2.2])
    cov = conditional_covariance(TrigBasis(6), params, JumpRecord(times, np.zeros(3)), 3.0)
    assert np.allclose(cov.matrix, kernel_covariance(6, -1.2, 0.8, 1.1, times, 3.0), atol=5e-8)


def test_eigenvalue_floor_holds_without_drift():
    params = NoiseParams(0.0, 1.0, 0.7, 1.0)
    rng = np.random.default_rng(0)
    for _ in range(20):
        cov = conditional_covariance(TrigBasis(3), params, sample_jumps(params, 5.0, rng), 5.0)
        assert check_lemma_54(cov, params).passed


def test_eigenvalue_floor_fails_with_mean_reversion():
    # the constant basis function integrates to xi_n, whose variance stays bounded
    # as n grows, so rho1^2 cannot be a floor once a < 0
    params = NoiseParams(-2.0, 1.0, 0.7, 1.0)
    cov = conditional_covariance(TrigBasis(3), params, JumpRecord.empty(), 5.0)
    res = check_lemma_54(cov, params)
    assert not res.passed
    assert cov.matrix[0, 0] == pytest.approx(-math.expm1(-20.0) / 20.0, rel=1e-9)


def test_mean_top_eigenvalue_bound():
    params = NoiseParams(-0.5, 1.0, 0.7, 1.0)
    res = check_lemma_55(TrigBasis(3), params, 5.0, 200, np.random.default_rng(1))
    assert res.passed and res.mean_lambda_max < res.bound


def test_conditioned_simulation_matches_covariance():
    params = NoiseParams(-0.5, 1.0, 0.7, 1.0)
    times = np.array([0.7, 2.31, 4.05])
    ref = conditional_covariance(TrigBasis(3), params, JumpRecord(times, np.zeros(3)), 5.0).matrix
    zeta = simulate_basis_integrals(params, 3, 5.0, 20_000, 3, 1e-3, jump_times=times) / math.sqrt(5.0)
    emp = zeta.T @ zeta / zeta.shape[0]
    se = np.sqrt((np.diag(ref)[:, None] * np.diag(ref)[None, :] + ref**2) / zeta.shape[0])
    assert np.all(np.abs(emp - ref) < 4 * se)


def test_frozen_jump_times_validated():
    params = NoiseParams(-0.5, 1.0, 0.7, 1.0)
    with pytest.raises(PreconditionError):
        simulate_basis_integrals(params, 3, 5.0, 10, 0, 1e-2, jump_times=np.array([6.0]))
    with pytest.raises(PreconditionError):
        simulate_basis_integrals(params, 3, 5.0, 10, 0, 0.5)
