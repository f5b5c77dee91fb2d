"""Command-line front end.

Exit status is 0 on success, 1 when the request violates a mathematical
precondition and 2 on usage errors. Floats are printed with 12 significant
digits so identical invocations produce identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from . import bounds as bnd
from .certificates import (
    Regime,
    build_cert_eps_delta_1d,
    build_cert_multi_eps_delta_l1,
    build_cert_multi_eps_delta_l2,
    build_cert_multi_l1_zero_delta,
    build_cert_multi_l2_zero_delta,
    build_cert_zero_delta_1d,
    certificate_to_json,
    verify_certificate,
)
from .core import (
    L1,
    L2,
    CostFn,
    Power,
    PrivacyParams,
    cost_from_json,
    dist_from_json,
    dist_to_json,
    expected_cost_estimate,
)
from .errors import DomainError
from .hypotest import tradeoff_region
from .lp import build_relaxed_lp, default_truncation, solve_lp
from .mechanisms import discrete_laplace, sample, uniform_mechanism_multi
from .privacy import check_dp

log = logging.getLogger("dpnoise")

SWEEP_COLUMNS = (
    "epsilon",
    "delta",
    "sensitivity",
    "dims",
    "cost",
    "v_lb",
    "lb_method",
    "v_ub_uniform",
    "v_ub_laplace",
    "v_ub_min",
    "ratio",
    "flags",
)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- formatting


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            return str(x)
        return format(x, ".12g")
    return str(x)


def _round_floats(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return str(obj)
        return float(format(obj, ".12g"))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, np.generic):
        return _round_floats(obj.item())
    return obj


def dump_json(obj) -> str:
    return json.dumps(_round_floats(obj), indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------- parsing helpers


def parse_cost(text: str) -> CostFn:
    if text == "l1":
        return L1()
    if text == "l2":
        return L2()
    if text.startswith("power:"):
        try:
            return Power(int(text.split(":", 1)[1]))
        except ValueError as exc:
            raise UsageError(f"bad power cost {text!r}") from exc
    if text.startswith("table:"):
        path = text.split(":", 1)[1]
        try:
            with open(path) as fh:
                return cost_from_json(json.load(fh))
        except OSError as exc:
            raise UsageError(f"cannot read cost table {path!r}: {exc}") from exc
    raise UsageError(f"unknown cost {text!r}; expected l1, l2, power:m or table:file.json")


def parse_grid(text: str) -> list[float]:
    """``a:b:log:n`` / ``a:b:lin:n`` (inclusive), comma list, or one value."""
    parts = text.split(":")
    try:
        if len(parts) == 4:
            a, b, kind, n = float(parts[0]), float(parts[1]), parts[2], int(parts[3])
            if n < 1:
                raise UsageError("grid count must be positive")
            if n == 1:
                return [a]
            if kind == "lin":
                return [a + (b - a) * i / (n - 1) for i in range(n)]
            if kind == "log":
                if a <= 0 or b <= 0:
                    raise UsageError("log grids need positive endpoints")
                la, lb = math.log10(a), math.log10(b)
                return [float(format(10 ** (la + (lb - la) * i / (n - 1)), ".15g")) for i in range(n)]
            raise UsageError(f"unknown grid kind {kind!r}; expected lin or log")
        if len(parts) == 1:
            return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}") from exc
    raise UsageError(f"bad grid {text!r}; expected a:b:log:n, a:b:lin:n or a comma list")


def _load_pmf(path: str):
    try:
        with open(path) as fh:
            return dist_from_json(json.load(fh))
    except OSError as exc:
        raise UsageError(f"cannot read pmf {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"pmf file {path!r} is not valid JSON: {exc}") from exc


def _params(args) -> PrivacyParams:
    return PrivacyParams(args.epsilon, args.delta, args.sensitivity, args.dims)


def _distribution(args, params: PrivacyParams):
    if args.pmf:
        return _load_pmf(args.pmf)
    if args.mechanism == "uniform":
        return uniform_mechanism_multi(params)
    if args.mechanism == "laplace":
        return discrete_laplace(params)
    raise UsageError("pass --pmf FILE or --mechanism {uniform,laplace}")


# ---------------------------------------------------------------- subcommands


def _bound_value(report):
    return None if report is None else report.value


def cmd_bounds(args) -> str:
    cost = parse_cost(args.cost)
    params = _params(args).require_budget()
    gap = bnd.gap_report(cost, params, args.truncation)
    upper = gap.upper
    out = {
        "epsilon": params.epsilon,
        "delta": params.delta,
        "sensitivity": params.sensitivity,
        "dims": params.dims,
        "cost": cost.name,
        "v_lb": _bound_value(gap.lower),
        "lb_method": gap.lower.method if gap.lower else None,
        "v_ub_uniform": _bound_value(gap.upper_uniform),
        "v_ub_laplace": _bound_value(gap.upper_laplace),
        "v_ub_min": _bound_value(upper),
        "ratio": gap.ratio,
        "flags": list(gap.flags),
        "lower": gap.lower.to_json() if gap.lower else None,
    }
    return dump_json(out)


def cmd_mechanism_cost(args) -> str:
    params = _params(args)
    if not args.pmf:
        params.require_budget()
    cost = parse_cost(args.cost)
    dist = _distribution(args, params)
    est = expected_cost_estimate(dist, cost)
    out = {
        "distribution": dist_to_json(dist) if args.pmf else args.mechanism,
        "cost": cost.name,
        "expected_cost": est.value,
        "error_bound": est.error_bound,
    }
    return dump_json(out)


def cmd_check(args) -> str:
    params = _params(args)
    dist = _distribution(args, params)
    report = check_dp(dist, params)
    return dump_json({"epsilon": params.epsilon, "delta": params.delta, "sensitivity": params.sensitivity, **report.to_json()})


def cmd_lp(args) -> str:
    cost = parse_cost(args.cost)
    params = _params(args).require_budget()
    if params.dims != 1:
        raise UsageError("the relaxed LP is one-dimensional; use --dims 1")
    n = args.truncation or default_truncation(params.sensitivity, params.epsilon, params.delta)
    problem = build_relaxed_lp(cost, params.sensitivity, params.epsilon, params.delta, n)
    sol = solve_lp(problem, args.solver)
    return dump_json(sol.to_json(include_pmf=args.dump_pmf))


def cmd_certificate(args) -> str:
    params = _params(args).require_budget()
    regime = Regime(args.regime)
    s, d = params.sensitivity, params.dims
    if regime is Regime.ZeroDelta1D:
        cost = parse_cost(args.cost)
        cert = build_cert_zero_delta_1d(cost, s, params.delta)
    elif regime is Regime.EpsDelta1D:
        cost = parse_cost(args.cost)
        n = args.series_length
        if n is None:
            series = bnd.EpsDeltaSeriesParams.from_privacy(params.epsilon, params.delta)
            if not math.isfinite(series.n_star):
                raise UsageError("delta = 0 has no finite series length; pass --series-length")
            n = math.floor(series.n_star)
        cert = build_cert_eps_delta_1d(cost, s, params.epsilon, params.delta, n)
    elif regime is Regime.MultiZeroDeltaL1:
        cost = L1()
        cert = build_cert_multi_l1_zero_delta(d, s, params.delta)
    elif regime is Regime.MultiZeroDeltaL2:
        cost = L2()
        cert = build_cert_multi_l2_zero_delta(d, s, params.delta)
    elif regime is Regime.MultiEpsDeltaL1:
        cost = L1()
        cert = build_cert_multi_eps_delta_l1(d, s, params.beta)
    else:
        cost = L2()
        cert = build_cert_multi_eps_delta_l2(d, s, params.beta)
    report = verify_certificate(cert, cost, params)
    out = {"certificate": certificate_to_json(cert, args.dump_weights), "cost": cost.name, **report.to_json()}
    return dump_json(out)


def cmd_sample(args) -> str:
    params = _params(args)
    if not args.pmf:
        params.require_budget()
    dist = _distribution(args, params)
    return sample(dist, args.seed, args.n).to_csv()


@dataclass(frozen=True)
class SweepGrid:
    epsilons: tuple
    deltas: tuple  # empty means "delta equals epsilon"
    sensitivity: int
    dims: int
    cost: CostFn
    truncation: int | None = None

    def points(self) -> list[tuple[float, float]]:
        if not self.epsilons:
            raise UsageError("epsilon grid is empty")
        if not self.deltas:
            return [(e, e) for e in self.epsilons]
        return [(e, d) for e in self.epsilons for d in self.deltas]


def _sweep_row(grid: SweepGrid, eps: float, dlt: float) -> list[str]:
    base = [fmt(eps), fmt(dlt), str(grid.sensitivity), str(grid.dims), grid.cost.name]
    try:
        params = PrivacyParams(eps, dlt, grid.sensitivity, grid.dims).require_budget()
        gap = bnd.gap_report(grid.cost, params, grid.truncation)
    except DomainError as exc:
        log.info("sweep point (%r, %r) failed: %s", eps, dlt, exc)
        return base + [""] * 6 + [f"error:{type(exc).__name__}"]
    upper = gap.upper
    return base + [
        fmt(_bound_value(gap.lower)),
        gap.lower.method if gap.lower else "",
        fmt(_bound_value(gap.upper_uniform)),
        fmt(_bound_value(gap.upper_laplace)),
        fmt(_bound_value(upper)),
        fmt(gap.ratio),
        ";".join(gap.flags),
    ]


def run_sweep(grid: SweepGrid, jobs: int = 1) -> str:
    points = grid.points()
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        rows = list(pool.map(lambda pt: _sweep_row(grid, *pt), points))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_sweep(args) -> str:
    eps = tuple(parse_grid(args.epsilon))
    deltas = () if args.delta == "epsilon" else tuple(parse_grid(args.delta))
    grid = SweepGrid(eps, deltas, args.sensitivity, args.dims, parse_cost(args.cost), args.truncation)
    return run_sweep(grid, args.jobs)


def cmd_tradeoff(args) -> str:
    region = tradeoff_region(args.epsilon, args.delta)
    if args.format == "json":
        return dump_json({"epsilon": region.epsilon, "delta": region.delta, "vertices": [list(v) for v in region.vertices]})
    return region.to_csv()


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpnoise", description="Noise mechanisms and cost bounds for (epsilon, delta) privacy.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    parser.subcommands = sub.choices

    def common(p, *, cost=True, dims=True, privacy=True):
        if privacy:
            p.add_argument("--epsilon", type=float, default=0.0)
            p.add_argument("--delta", type=float, default=0.0)
            p.add_argument("--sensitivity", type=int, default=1)
        if dims:
            p.add_argument("--dims", type=int, default=1)
        if cost:
            p.add_argument("--cost", default="l1", help="l1 | l2 | power:m | table:file.json")
        p.add_argument("--out", help="write output to this file instead of stdout")

    p = sub.add_parser("bounds", help="lower and upper bounds with their ratio")
    common(p)
    p.add_argument("--truncation", type=int)
    p.add_argument("--format", choices=["json"], default="json")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("mechanism-cost", help="expected cost of a mechanism or pmf file")
    common(p)
    p.add_argument("--mechanism", choices=["uniform", "laplace"])
    p.add_argument("--pmf")
    p.add_argument("--format", choices=["json"], default="json")
    p.set_defaults(func=cmd_mechanism_cost)

    p = sub.add_parser("check", help="tightest delta of a pmf and whether it meets --delta")
    common(p, cost=False)
    p.add_argument("--mechanism", choices=["uniform", "laplace"])
    p.add_argument("--pmf")
    p.add_argument("--format", choices=["json"], default="json")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("lp", help="solve the truncated relaxed LP")
    common(p)
    p.add_argument("--truncation", type=int)
    p.add_argument("--solver", choices=["auto", "simplex", "highs"], default="auto")
    p.add_argument("--dump-pmf", action="store_true")
    p.add_argument("--format", choices=["json"], default="json")
    p.set_defaults(func=cmd_lp)

    p = sub.add_parser("certificate", help="build and verify a dual certificate")
    common(p)
    p.add_argument("--regime", required=True, choices=[r.value for r in Regime])
    p.add_argument("--series-length", type=int)
    p.add_argument("--dump-weights", action="store_true")
    p.add_argument("--format", choices=["json"], default="json")
    p.set_defaults(func=cmd_certificate)

    p = sub.add_parser("sample", help="draw noise samples as CSV")
    common(p, cost=False)
    p.add_argument("--mechanism", choices=["uniform", "laplace"])
    p.add_argument("--pmf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("sweep", help="bounds over a parameter grid as CSV")
    p.add_argument("--epsilon", required=True, help="grid: a:b:log:n, a:b:lin:n or comma list")
    p.add_argument("--delta", required=True, help="grid, or 'epsilon' to tie delta to epsilon")
    p.add_argument("--sensitivity", type=int, default=1)
    p.add_argument("--dims", type=int, default=1)
    p.add_argument("--cost", default="l1", help="l1 | l2 | power:m | table:file.json")
    p.add_argument("--truncation", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv"], default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("tradeoff-region", help="boundary vertices of the (P_FA, P_MD) region")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_tradeoff)
    return parser


def _configure_logging() -> None:
    level = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("DPNOISE_LOG", "quiet").lower(), logging.ERROR
    )
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def dispatch(argv: Sequence[str], stdout: TextIO | None = None, stderr: TextIO | None = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(list(argv))
        if extra:
            # report against the subcommand so the usage line lists its flags
            parser.subcommands[args.command].error(f"unrecognized arguments: {' '.join(extra)}")
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = args.func(args)
    except UsageError as exc:
        parser.print_usage(stderr)
        print(f"dpnoise: error: {exc}", file=stderr)
        return 2
    except (DomainError, ValueError) as exc:
        print(f"dpnoise: {exc}", file=stderr)
        return 1
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
