"""Command-line experiment runner.

Every subcommand writes one CSV table (or, for ``figure1``, optionally an SVG
chart).  The CSV starts with ``#`` comment lines echoing the resolved
configuration, including the seed, followed by a header row.  Floats are
written with 12 significant digits.  The exit status is 1 when any row is
marked FAIL, 2 on configuration errors and 0 otherwise.

Worker count is deliberately left out of the echo: results do not depend on
it, and the CSV bytes should not either.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .ar1 import eigen_sweep, lambda_max_bound, mc_risk_ar1
from .condgauss import (
    CondGaussModel,
    ShrinkageConfig,
    ball_grid,
    mc_risk,
    ray_grid,
    spiked_sampler,
    sup_delta_over_grid,
)
from .oulevy import DEFAULT_STEP, NoiseParams, TrigBasis
from .regression import A_STAR_MODES, RegressionExperiment, mc_risk_thm31
from .special import GammaPInputs, gamma_p_closed, gamma_p_quadrature, gamma_p_zero_radius, risk_at_zero_rp
from .verify import verify_eigenvalue_floor, verify_mean_top_eigenvalue, verify_second_moments, verify_conditional_covariance

DEFAULT_SEED = 20261017
GAMMA_TABLE_RTOL = 1e-8
NOT_ECHOED = {"command", "config", "out", "workers", "handler"}


class ConfigError(ValueError):
    """A configuration value failed validation; ``field`` names the offending key."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class Table:
    header: list[str]
    rows: list[list] = field(default_factory=list)
    svg: str | None = None

    @property
    def failed(self) -> bool:
        if "status" not in self.header:
            return False
        k = self.header.index("status")
        return any(row[k] == "FAIL" for row in self.rows)


def status(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if v == 0.0:
            return "0"
        return format(v, ".12g")
    if isinstance(value, (list, tuple, np.ndarray)):
        return " ".join(fmt(v) for v in np.ravel(value))
    return "" if value is None else str(value)


# -- argument types --------------------------------------------------------------


def float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _require(cond: bool, field_name: str, message: str) -> None:
    if not cond:
        raise ConfigError(field_name, message)


def _check_common(args) -> None:
    _require(args.seed >= 0, "seed", "must be a nonnegative integer")
    _require(args.workers >= 1, "workers", "must be at least 1")
    if hasattr(args, "trials"):
        _require(args.trials >= 0, "trials", "must be nonnegative")


def _theta_grid(args, p: int, default: Callable[[], np.ndarray]) -> np.ndarray:
    if args.theta is None:
        return default()
    theta = np.asarray(args.theta, dtype=float)
    _require(theta.size == p, "theta", f"needs {p} entries, got {theta.size}")
    _require(np.linalg.norm(theta) <= args.d * (1 + 1e-12), "theta", f"norm exceeds d = {args.d}")
    return theta[None, :]


def _delta_rows(reports, extra: Sequence = ()) -> list[list]:
    rows = []
    for r in reports:
        ok = r.within_bound and r.dominates
        rows.append(
            [
                *extra,
                float(np.linalg.norm(r.theta)),
                r.theta,
                r.risk_lse,
                r.risk_lse_hw,
                r.risk_shrink,
                r.risk_shrink_hw,
                r.delta,
                r.delta_hw,
                r.bound,
                status(ok),
            ]
        )
    return rows


DELTA_HEADER = [
    "theta_norm",
    "theta",
    "risk_lse",
    "risk_lse_hw",
    "risk_shrink",
    "risk_shrink_hw",
    "delta",
    "delta_hw",
    "bound",
    "status",
]


# -- subcommands ----------------------------------------------------------------------


def cmd_figure1(args) -> Table:
    _require(2 <= args.p_min <= args.p_max, "p_min", "need 2 <= p_min <= p_max")
    _require(args.trials == 0 or args.trials >= 1000, "trials", "use 0 (no Monte Carlo) or at least 1000")
    ps = list(range(args.p_min, args.p_max + 1))
    header = ["p", "r_p", "js_risk", "lse_risk"]
    mc_cols = args.trials > 0
    if mc_cols:
        header += ["mc_shrink", "mc_shrink_hw", "mc_js", "mc_js_hw", "status"]
    table = Table(header)
    for p in ps:
        rp = risk_at_zero_rp(p)
        row = [p, rp, 2.0, float(p)]
        if mc_cols:
            model = CondGaussModel(np.zeros(p), cov=np.eye(p))
            c = (p - 1) * gamma_p_zero_radius(p)
            shr = mc_risk("shrink", model, args.trials, args.seed, c=c, workers=args.workers)
            js = mc_risk("js", model, args.trials, args.seed + 1, workers=args.workers)
            ok = abs(shr.empirical_risk - rp) <= shr.half_width and abs(js.empirical_risk - 2.0) <= js.half_width
            row += [shr.empirical_risk, shr.half_width, js.empirical_risk, js.half_width, status(ok)]
        table.rows.append(row)
    if args.format == "svg":
        table.svg = figure1_svg(ps, [r[1] for r in table.rows], [r[2] for r in table.rows], [r[3] for r in table.rows])
    return table


def figure1_svg(ps, rp, js, lse, width: int = 640, height: int = 400) -> str:
    """Three polylines on a fixed viewport, no plotting library."""
    left, right, top, bottom = 60, 20, 30, 50
    x0, x1 = min(ps), max(ps)
    y1 = max(max(lse), max(js), max(rp))
    sx = (width - left - right) / max(x1 - x0, 1)
    sy = (height - top - bottom) / y1

    def pts(ys):
        return " ".join(f"{left + (x - x0) * sx:.2f},{height - bottom - y * sy:.2f}" for x, y in zip(ps, ys))

    ticks = []
    for k in range(0, int(math.floor(y1)) + 1, max(1, int(y1) // 5)):
        y = height - bottom - k * sy
        ticks.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        ticks.append(f'<text x="{left - 8}" y="{y + 4:.2f}" font-size="11" text-anchor="end">{k}</text>')
    for p in ps:
        x = left + (p - x0) * sx
        ticks.append(f'<text x="{x:.2f}" y="{height - bottom + 16}" font-size="11" text-anchor="middle">{p}</text>')
    series = [("r_p (shrinkage)", rp, "#1f77b4"), ("James-Stein", js, "#d62728"), ("LSE", lse, "#2ca02c")]
    lines = [
        f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts(ys)}"/>' for _, ys, color in series
    ]
    legend = [
        f'<text x="{width - right - 150}" y="{top + 16 * (i + 1)}" font-size="12" fill="{color}">{name}</text>'
        for i, (name, _, color) in enumerate(series)
    ]
    body = "\n".join(
        [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
            '<rect width="100%" height="100%" fill="white"/>',
            f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" stroke="black"/>',
            f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>',
            *ticks,
            *lines,
            *legend,
            f'<text x="{width / 2:.0f}" y="{height - 10}" font-size="12" text-anchor="middle">p</text>',
            f'<text x="{width / 2:.0f}" y="18" font-size="13" text-anchor="middle">Risk at theta = 0</text>',
            "</svg>",
        ]
    )
    return body + "\n"


def cmd_gamma_p(args) -> Table:
    _require(args.p >= 2, "p", "must be >= 2")
    _require(args.d > 0, "d", "must be positive")
    _require(args.a_star > 0, "a_star", "must be positive")
    table = Table(["p", "d", "a_star", "closed", "quadrature", "rel_diff", "status"])
    for p in range(2, args.p + 1):
        inp = GammaPInputs(p, args.d, args.a_star)
        quad = gamma_p_quadrature(inp)
        closed = gamma_p_closed(inp)
        rel = abs(closed - quad) / abs(quad)
        table.rows.append([p, args.d, args.a_star, closed, quad, rel, status(rel <= GAMMA_TABLE_RTOL)])
    return table


def cmd_risk_cond_gauss(args) -> Table:
    _require(args.p >= 2, "p", "must be >= 2")
    _require(args.d > 0, "d", "must be positive")
    _require(args.lambda_star > 0, "lambda_star", "must be positive")
    _require(args.trials >= 1000, "trials", "must be at least 1000")
    p = args.p
    if args.cov == "scaled-identity":
        model = CondGaussModel(np.zeros(p), cov=args.lambda_star * np.eye(p), lambda_star=args.lambda_star)
        a_star = args.lambda_star
    else:
        _require(args.spike_mean > 0, "spike_mean", "must be positive")
        model = CondGaussModel(
            np.zeros(p), sampler=spiked_sampler(p, args.lambda_star, args.spike_mean), lambda_star=args.lambda_star
        )
        a_star = args.lambda_star + args.spike_mean
    config = ShrinkageConfig.optimal(p, args.d, args.lambda_star, a_star)
    grid = _theta_grid(args, p, lambda: ball_grid(p, args.d))
    res = sup_delta_over_grid(model, config, grid, args.trials, args.seed, args.workers)
    table = Table(["gamma_p", "c", *DELTA_HEADER])
    table.rows = _delta_rows(res.reports, (config.gamma_p, config.c))
    return table


def cmd_risk_ou(args) -> Table:
    _require(args.p >= 2, "p", "must be >= 2")
    _require(args.n >= 1, "n", "must be a positive integer")
    _require(args.d > 0, "d", "must be positive")
    _require(args.trials >= 2, "trials", "must be at least 2")
    _require(0 < args.step <= 1e-2, "step", "must lie in (0, 0.01]")
    noise = NoiseParams(args.a, args.rho1, args.rho2, args.lam)
    grid = _theta_grid(args, args.p, lambda: ray_grid(args.p, args.theta_norms))
    exp = RegressionExperiment(
        grid[0], TrigBasis(args.p), noise, args.n, args.d, args.trials, args.seed, args.step, args.workers
    )
    res = mc_risk_thm31(exp, grid, args.a_star_mode)
    table = Table(["gamma_p", "c", "a_star", *DELTA_HEADER])
    table.rows = _delta_rows(res.grid.reports, (res.gamma_p, res.c, res.a_star))
    return table


def cmd_risk_ar1(args) -> Table:
    _require(0 < args.alpha < 1, "alpha", "must lie in (0, 1)")
    _require(args.p > lambda_max_bound(args.alpha), "p", f"must exceed 1/(1-alpha)^2 = {lambda_max_bound(args.alpha):g}")
    _require(all(abs(a) <= args.alpha for a in args.a), "a", "every coefficient needs |a| <= alpha")
    _require(args.d > 0, "d", "must be positive")
    _require(args.trials >= 2, "trials", "must be at least 2")
    p = args.p
    header = ["kind", "a", "gamma_p", "c", *DELTA_HEADER[:-1], "lambda_max", "trace_minus_lambda_max", "status"]
    table = Table(header)
    grid = _theta_grid(args, p, lambda: ball_grid(p, args.d))
    for a in args.a:
        res = mc_risk_ar1(p, args.alpha, a, args.d, grid, args.trials, args.seed, args.workers)
        for row in _delta_rows(res.grid.reports, ("risk", a, res.gamma_p, res.c)):
            table.rows.append(row[:-1] + [None, None, row[-1]])
    if args.sweep_points > 0:
        lam_bound = lambda_max_bound(args.alpha)
        for a, lmax, _, gap in eigen_sweep(p, args.alpha, args.sweep_points):
            ok = lmax <= lam_bound * (1 + 1e-12) and gap >= p - lam_bound - 1e-12
            table.rows.append(["sweep", a] + [None] * 11 + [lmax, gap, status(ok)])
    return table


def cmd_verify_appendix(args) -> Table:
    _require(args.p >= 1, "p", "must be >= 1")
    _require(args.n >= 1, "n", "must be positive")
    _require(args.trials >= 2, "trials", "must be at least 2")
    _require(args.configs >= 1, "configs", "must be at least 1")
    _require(args.top_eigen_configs >= 2, "top_eigen_configs", "must be at least 2")
    table = Table(["check", "a", "i", "j", "estimate", "reference", "half_width", "status", "note"])
    for a in args.a:
        params = NoiseParams(a, args.rho1, args.rho2, args.lam)
        rows = verify_second_moments(params, args.p, args.n, args.trials, args.seed, args.step, args.workers)
        rows += verify_conditional_covariance(params, args.p, args.n, args.trials, args.seed + 1, args.step, args.workers)
        rows.append(verify_eigenvalue_floor(params, args.p, args.n, args.configs, args.seed + 2))
        rows.append(verify_mean_top_eigenvalue(params, args.p, args.n, args.top_eigen_configs, args.seed + 3))
        for r in rows:
            table.rows.append([r.check, r.a, r.i, r.j, r.estimate, r.reference, r.half_width, status(r.passed), r.note])
    return table


# -- parser ---------------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON file of option values; flags given on the command line win")
    parent.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parent.add_argument("--workers", type=int, default=1, help="worker threads (does not change results)")
    parent.add_argument("--out", default="-", help="output path, '-' for stdout")
    parent.add_argument("--format", choices=("csv", "svg"), default="csv")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oushrink", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    parent = _common()

    def add(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, parents=[parent], help=help_text)
        sp.set_defaults(handler=handler)
        return sp

    sp = add("figure1", cmd_figure1, "risk at theta = 0 against p for three estimators")
    sp.add_argument("--p-min", type=int, default=2)
    sp.add_argument("--p-max", "--p", type=int, default=20)
    sp.add_argument("--trials", type=int, default=0, help="Monte Carlo trials per p (0 skips simulation)")

    sp = add("gamma-p", cmd_gamma_p, "closed-form and quadrature values of gamma_p")
    sp.add_argument("--p", type=int, default=20, help="largest dimension in the table")
    sp.add_argument("--d", type=float, default=2.0)
    sp.add_argument("--a-star", type=float, default=0.5)

    sp = add("risk-cond-gauss", cmd_risk_cond_gauss, "risk differences under conditionally Gaussian noise")
    sp.add_argument("--p", type=int, default=5)
    sp.add_argument("--d", type=float, default=2.0)
    sp.add_argument("--lambda-star", type=float, default=0.5)
    sp.add_argument("--cov", choices=("scaled-identity", "spiked"), default="scaled-identity")
    sp.add_argument("--spike-mean", type=float, default=1.0)
    sp.add_argument("--theta", type=float_list, default=None, help="single parameter vector (default: 9-point grid)")
    sp.add_argument("--trials", type=int, default=1_000_000)

    sp = add("risk-ou", cmd_risk_ou, "risk differences in the regression with Levy-driven OU noise")
    sp.add_argument("--p", type=int, default=3)
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--a", type=float, default=-1.0)
    sp.add_argument("--rho1", type=float, default=1.0)
    sp.add_argument("--rho2", type=float, default=0.5)
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sp.add_argument("--d", type=float, default=2.0)
    sp.add_argument("--step", type=float, default=DEFAULT_STEP)
    sp.add_argument("--theta", type=float_list, default=None)
    sp.add_argument("--theta-norms", type=float_list, default="0,1,2")
    sp.add_argument("--a-star-mode", choices=A_STAR_MODES, default="scaled")
    sp.add_argument("--trials", type=int, default=100_000)

    sp = add("risk-ar1", cmd_risk_ar1, "risk differences under stationary AR(1) noise")
    sp.add_argument("--p", type=int, default=8)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--a", type=float_list, default="0.5", help="AR coefficients to simulate")
    sp.add_argument("--d", type=float, default=2.0)
    sp.add_argument("--theta", type=float_list, default=None)
    sp.add_argument("--sweep-points", type=int, default=41)
    sp.add_argument("--trials", type=int, default=1_000_000)

    sp = add("verify-appendix", cmd_verify_appendix, "Monte Carlo and quadrature checks of the integral identities")
    sp.add_argument("--p", type=int, default=3)
    sp.add_argument("--n", type=float, default=5.0)
    sp.add_argument("--a", type=float_list, default="0,-0.5,-2")
    sp.add_argument("--rho1", type=float, default=1.0)
    sp.add_argument("--rho2", type=float, default=0.7)
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sp.add_argument("--step", type=float, default=DEFAULT_STEP)
    sp.add_argument("--trials", type=int, default=100_000, help="simulated paths per check")
    sp.add_argument("--configs", type=int, default=100, help="jump configurations for the eigenvalue floor")
    sp.add_argument("--top-eigen-configs", type=int, default=1000)
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def load_config(path: str, sp: argparse.ArgumentParser) -> dict:
    """Read a JSON object whose keys are option names (dashes or underscores)."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be an object")
    known = {a.dest for a in sp._actions}
    out = {}
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest == "lambda":
            dest = "lam"
        if dest not in known or dest in {"help", "config"}:
            raise ConfigError(key, "unknown option for this subcommand")
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        out[dest] = str(value) if not isinstance(value, str) else value
    return out


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sp = _subparser(parser, args.command)
        sp.set_defaults(**load_config(args.config, sp))
        args = parser.parse_args(argv)
    return args


def _echo(args) -> list[str]:
    items = {k: v for k, v in vars(args).items() if k not in NOT_ECHOED}
    lines = [f"# oushrink {args.command}"]
    lines += [f"# {k} = {fmt(items[k])}" for k in sorted(items)]
    return lines


def render_csv(args, table: Table) -> str:
    buf = io.StringIO()
    for line in _echo(args):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.header)
    for row in table.rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from None


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        _check_common(args)
        if args.format == "svg" and args.command != "figure1":
            raise ConfigError("format", "svg output is only available for figure1")
        table = args.handler(args)
    except ValueError as exc:
        print(f"oushrink: error: {exc}", file=sys.stderr)
        return 2
    try:
        _write(args.out, table.svg if table.svg is not None else render_csv(args, table))
    except OSError as exc:
        print(f"oushrink: error: {exc}", file=sys.stderr)
        return 2
    return 1 if table.failed else 0


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))
