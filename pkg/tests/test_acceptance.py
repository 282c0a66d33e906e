"""Acceptance criteria 1 to 9, each at its stated tolerance.

Every test records one PASS/FAIL line; the lines are repeated in the pytest
terminal summary.  Run standalone with ``python3 tests/test_acceptance.py``.
Seeds are fixed up front and never tuned.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest
from conftest import record

from oushrink import cli
from oushrink.ar1 import eigen_sweep, lambda_max_bound, mc_risk_ar1
from oushrink.condgauss import CondGaussModel, ShrinkageConfig, ball_grid, mc_risk, ray_grid, sup_delta_over_grid
from oushrink.oulevy import NoiseParams, TrigBasis
from oushrink.regression import RegressionExperiment, mc_risk_thm31
from oushrink.special import gamma_p_zero_radius, risk_at_zero_rp
from oushrink.verify import (
    verify_conditional_covariance,
    verify_eigenvalue_floor,
    verify_mean_top_eigenvalue,
    verify_second_moments,
)

pytestmark = pytest.mark.acceptance

SEED = 20261017
WORKERS = 1
A_VALUES = (0.0, -0.5, -2.0)
RHO1, RHO2, LAM = 1.0, 0.7, 1.0


def _failed(rows):
    return [r for r in rows if not r.passed]


def test_criterion_1_closed_form_rp():
    t0 = time.perf_counter()
    r2_err = abs(risk_at_zero_rp(2) - (2 - math.pi / 2))
    r3_err = abs(risk_at_zero_rp(3) - (3 - 8 / math.pi))
    r = [risk_at_zero_rp(p) for p in range(2, 101)]
    increasing = all(x < y for x, y in zip(r, r[1:]))
    tail = abs(r[-1] - 0.5)
    elapsed = time.perf_counter() - t0
    ok = r2_err <= 1e-9 and r3_err <= 1e-9 and increasing and tail <= 0.002 and elapsed < 1.0
    record(
        "1",
        ok,
        f"|r2 err|={r2_err:.1e} |r3 err|={r3_err:.1e} increasing={increasing} "
        f"|r100-0.5|={tail:.5f} time={elapsed:.3f}s",
    )
    assert ok


def test_criterion_2_figure_reproduction(capsys):
    code = cli.run(["figure1", "--p-min", "2", "--p-max", "20"])
    text = capsys.readouterr().out
    rows = [line.split(",") for line in text.splitlines() if line and not line.startswith("#")]
    curves_ok = code == 0 and rows[0] == ["p", "r_p", "js_risk", "lse_risk"] and len(rows) == 20

    trials = 1_000_000
    worst = 0.0
    details = []
    ok = curves_ok
    for p in (2, 3, 5, 10):
        model = CondGaussModel(np.zeros(p), cov=np.eye(p))
        rep = mc_risk("shrink", model, trials, SEED + p, c=(p - 1) * gamma_p_zero_radius(p), workers=WORKERS)
        z = abs(rep.empirical_risk - risk_at_zero_rp(p)) / (rep.half_width / 3)
        worst = max(worst, z)
        ok &= z <= 3
        details.append(f"p={p}:{rep.empirical_risk:.4f}")
    js_worst = 0.0
    for p in (3, 5, 10):
        model = CondGaussModel(np.zeros(p), cov=np.eye(p))
        rep = mc_risk("js", model, trials, SEED + 100 + p, workers=WORKERS)
        z = abs(rep.empirical_risk - 2.0) / (rep.half_width / 3)
        js_worst = max(js_worst, z)
        ok &= z <= 3
    record("2", ok, f"curves={curves_ok} shrink {' '.join(details)} max z={worst:.2f}; js max z={js_worst:.2f}")
    assert ok


def test_criterion_3_conditionally_gaussian_domination():
    p, lam, d = 5, 0.5, 2.0
    model = CondGaussModel(np.zeros(p), cov=lam * np.eye(p), lambda_star=lam)
    cfg = ShrinkageConfig.optimal(p, d, lam, lam)
    res = sup_delta_over_grid(model, cfg, ball_grid(p, d), 1_000_000, SEED, WORKERS)
    ok = all(r.within_bound for r in res.reports)
    slack = min(r.bound + r.delta_hw - r.delta for r in res.reports)
    record("3", ok, f"9 points, worst delta={res.worst_delta:.5f} bound={cfg.bound:.5f} min slack={slack:.5f}")
    assert ok


def test_criterion_4_unconditional_second_moments():
    bad, total = [], 0
    for a in A_VALUES:
        rows = verify_second_moments(NoiseParams(a, RHO1, RHO2, LAM), 3, 5.0, 100_000, SEED, 1e-3, WORKERS)
        total += len(rows)
        bad += _failed(rows)
    ok = not bad
    info = "; ".join(f"{r.check} a={r.a} ({r.i},{r.j})" for r in bad) or "none"
    record("4", ok, f"{total} checks over a in {A_VALUES}, failures: {info}")
    assert ok


def test_criterion_5_conditional_covariance():
    bad, total, worst = [], 0, 0.0
    for a in A_VALUES:
        rows = verify_conditional_covariance(NoiseParams(a, RHO1, RHO2, LAM), 3, 5.0, 100_000, SEED, 1e-3, WORKERS)
        rows = [r for r in rows if r.check == "cond-covariance"]
        total += len(rows)
        bad += _failed(rows)
        worst = max([worst] + [abs(r.estimate - r.reference) / (r.half_width / 3) for r in rows])
    ok = not bad
    info = "; ".join(f"a={r.a} ({r.i},{r.j})" for r in bad) or "none"
    record("5", ok, f"{total} entries, max |z|={worst:.2f}, failures: {info}")
    assert ok


def test_criterion_6a_eigenvalue_floor():
    rows = [verify_eigenvalue_floor(NoiseParams(a, RHO1, RHO2, LAM), 3, 5.0, 100, SEED) for a in A_VALUES]
    ok = all(r.passed for r in rows)
    info = " ".join(f"a={r.a}:min={r.estimate:.4f}" for r in rows)
    record("6a", ok, f"lambda_min vs rho1^2={RHO1**2}: {info}")
    assert ok, "eigenvalue floor rho1^2 violated for a < 0 (see decisions ledger)"


def test_criterion_6b_mean_top_eigenvalue():
    rows = [verify_mean_top_eigenvalue(NoiseParams(a, RHO1, RHO2, LAM), 3, 5.0, 1000, SEED) for a in A_VALUES]
    ok = all(r.passed for r in rows)
    info = " ".join(f"a={r.a}:{r.estimate:.3f}" for r in rows)
    record("6b", ok, f"mean lambda_max vs 3p rho*={rows[0].reference:.3f}: {info}")
    assert ok


def test_criterion_7_regression_domination():
    noise = NoiseParams(-1.0, 1.0, 0.5, 1.0)
    grid = ray_grid(3, [0.0, 1.0, 2.0])
    exp = RegressionExperiment(grid[0], TrigBasis(3), noise, 10, 2.0, 100_000, SEED, 1e-3, WORKERS)
    res = mc_risk_thm31(exp, grid)
    ok = all(r.dominates for r in res.grid.reports)
    info = " ".join(f"|theta|={np.linalg.norm(r.theta):.0f}:{r.delta:.5f}+-{r.delta_hw:.5f}" for r in res.grid.reports)
    record("7", ok, f"c={res.c:.5f} {info}")
    assert ok


def test_criterion_8_ar1_domination():
    p, alpha, d = 8, 0.5, 2.0
    res = mc_risk_ar1(p, alpha, alpha, d, ball_grid(p, d), 1_000_000, SEED, WORKERS)
    risk_ok = all(r.within_bound for r in res.grid.reports)
    bound = -((p - 4) ** 2) * res.gamma_p**2
    sweep = eigen_sweep(p, alpha, 101)
    lam_ok = bool(np.all(sweep[:, 1] <= lambda_max_bound(alpha) + 1e-12))
    gap_ok = bool(np.all(sweep[:, 3] >= p - 4 - 1e-12))
    ok = risk_ok and lam_ok and gap_ok and math.isclose(bound, res.grid.reports[0].bound)
    record(
        "8",
        ok,
        f"worst delta={res.grid.worst_delta:.4f} bound={bound:.4f}; max lambda_max={sweep[:, 1].max():.4f} "
        f"min tr-lambda_max={sweep[:, 3].min():.4f}",
    )
    assert ok


def _cli_bytes(capsys, argv):
    code = cli.run(argv)
    return code, capsys.readouterr().out


def test_criterion_9_determinism(capsys):
    runs = {
        "risk-cond-gauss": ["risk-cond-gauss", "--trials", "1000000", "--seed", str(SEED)],
        "risk-ou": ["risk-ou", "--trials", "100000", "--seed", str(SEED)],
        "risk-ar1": ["risk-ar1", "--trials", "200000", "--seed", str(SEED)],
        "verify-appendix": [
            "verify-appendix", "--trials", "20000", "--configs", "20", "--top-eigen-configs", "50", "--seed", str(SEED),
        ],
    }
    same = {}
    for name, argv in runs.items():
        outs = {w: _cli_bytes(capsys, argv + ["--workers", str(w)]) for w in (1, 2, 4)}
        again = _cli_bytes(capsys, argv + ["--workers", "1"])
        same[name] = len({o for o in outs.values()}) == 1 and again == outs[1]
    ok = all(same.values())
    record("9", ok, " ".join(f"{k}={'identical' if v else 'DIFFERENT'}" for k, v in same.items()) + " (workers 1,2,4)")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
