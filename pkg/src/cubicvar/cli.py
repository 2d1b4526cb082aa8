"""Command-line front end.

Subcommands expose every computation and emit CSV or JSON with the fully
resolved run configuration echoed into the output metadata, so any result
file can be reproduced from its own header.

    kappa      the variance constant and the truncation order behind it
    fl         kernel values at a point or on a grid over [0, 1]
    rho        covariance density and correlation, single t or a curve
    classify   regime classification of an integer-sequence pair
    exact-cov  exact finite-grid covariance report
    simulate   Monte Carlo correlation vs the exact oracle
    xrho       Euler simulation of the correlated limit pair
    verify     the pre-registered verification suite (exit 0 pass / 1 fail)

Exit codes: 0 success, 1 verification failure, 2 usage or parse errors,
3 numeric non-convergence.  CSV uses '.' decimals, a header row, and 17
significant digits; JSON is a flat object with a metadata block.  The
environment variable CUBICVAR_SEED overrides the default seed; an explicit
--seed flag overrides both.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import checks
from .covariance_density import (
    AveragedRegime,
    RationalRegime,
    make_density,
)
from .exact_cov import covariance_report
from .kernels import (
    KernelSum,
    NonConvergence,
    RatioLimit,
    variance_rate_detail,
)
from .quadrature import QuadratureDepthExceeded
from .sequences import (
    AveragedLimit,
    DegenerateLimit,
    NotMonotone,
    ParseError,
    RationalFiniteK,
    UndeterminedLimit,
    classify,
    parse_seq,
    rational_candidates,
)
from .simulate import (
    EmbeddingNotPSD,
    InvalidGrid,
    SigmaNotReal,
    mc_corr,
    sim_limit_pair,
)

DEFAULT_SEED = 0xC0FFEE
DEFAULT_TOL = 1e-7
GRID_POINT_CAP = 1 << 22
EXACT_PAIR_CAP = 50_000_000

NUMERIC_ERRORS = (NonConvergence, QuadratureDepthExceeded, EmbeddingNotPSD, SigmaNotReal)


@dataclass
class RunConfig:
    """Fully resolved configuration of one run, echoed into every output."""

    subcommand: str
    output_format: str
    output_path: str | None
    seed: int
    tol: float
    params: dict = field(default_factory=dict)

    def metadata(self) -> dict:
        meta = {
            "subcommand": self.subcommand,
            "output_format": self.output_format,
            "seed": self.seed,
            "tol": self.tol,
        }
        meta.update(self.params)
        return meta


def _format_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def emit(config: RunConfig, rows: list[dict], stream) -> None:
    if config.output_format == "json":
        doc = {"metadata": config.metadata(), "results": rows}
        json.dump(doc, stream, indent=2, default=str)
        stream.write("\n")
        return
    for key, value in config.metadata().items():
        stream.write(f"# {key}={value!r}\n")
    if not rows:
        return
    header = list(rows[0].keys())
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_value(row[k]) for k in header])


def _write_output(config: RunConfig, rows: list[dict]) -> None:
    if config.output_path:
        with open(config.output_path, "w") as fh:
            emit(config, rows, fh)
    else:
        emit(config, rows, sys.stdout)


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("CUBICVAR_SEED")
    if env is not None:
        try:
            return int(env, 0)
        except ValueError:
            raise SystemExit(f"CUBICVAR_SEED: not an integer: {env!r}")
    return DEFAULT_SEED


def _resolve_format(args, multi_row: bool) -> str:
    if args.format is not None:
        return args.format
    return "csv" if multi_row else "json"


def parse_ratio_flag(text: str, assume_rational: bool, parser, flag: str = "--L") -> RatioLimit:
    """Parse 'p/q' exactly, or a decimal (irrational unless recognition is requested).

    With assume_rational, a decimal is promoted to a rational form when some
    continued-fraction convergent with denominator at most 10^6 reproduces
    the parsed double exactly.
    """
    text = text.strip()
    try:
        if "/" in text:
            num, _, den = text.partition("/")
            return RatioLimit.from_rational(int(num), int(den))
        value = float(text)
    except (ValueError, ZeroDivisionError) as exc:
        parser.error(f"{flag}: {exc}")
    if not (value > 0 and math.isfinite(value)):
        parser.error(f"{flag}: must be positive and finite, got {text}")
    if assume_rational:
        for cand in rational_candidates(Fraction(value)):
            if cand.numerator / cand.denominator == value:
                return RatioLimit.from_rational(cand.numerator, cand.denominator)
    return RatioLimit.from_float(value)


def _cmd_kappa(args, parser) -> int:
    value, order = variance_rate_detail(args.tol)
    config = RunConfig("kappa", _resolve_format(args, False), args.output,
                       _resolve_seed(args), args.tol)
    _write_output(config, [{"tol": args.tol, "kappa2": value, "truncation_order": order}])
    return 0


def _cmd_fl(args, parser) -> int:
    ratio = parse_ratio_flag(args.L, args.assume_rational, parser)
    kernel = KernelSum.for_ratio(ratio, args.tol)
    multi = args.grid is not None
    config = RunConfig("fl", _resolve_format(args, multi), args.output,
                       _resolve_seed(args), args.tol,
                       params={"L": ratio.value,
                               "L_rational": "/".join(map(str, ratio.rational_form)) if ratio.rational_form else None,
                               "truncation_order": kernel.order})
    if multi:
        xs = np.linspace(0.0, 1.0, args.grid + 1)
        vals = kernel(xs)
        rows = [{"x": float(x), "f": float(v)} for x, v in zip(xs, vals)]
    else:
        rows = [{"x": args.at, "f": kernel(args.at)}]
    _write_output(config, rows)
    return 0


def _make_regime(args, parser):
    if args.L is not None:
        if args.p is not None or args.q is not None or args.k is not None:
            parser.error("--L: mutually exclusive with --p/--q/--k")
        ratio = parse_ratio_flag(args.L, args.assume_rational, parser)
        return AveragedRegime(ratio.value), ratio
    if args.p is None or args.q is None or args.k is None:
        parser.error("--p/--q/--k: all three are required without --L")
    if math.gcd(args.p, args.q) != 1:
        parser.error(f"--p/--q: {args.p}/{args.q} is not in lowest terms")
    if args.k < 0:
        parser.error("--k: must be nonnegative")
    return RationalRegime(args.p, args.q, args.k), None


def _cmd_rho(args, parser) -> int:
    regime, ratio = _make_regime(args, parser)
    density = make_density(regime, args.tol)
    if (args.t is None) == (args.curve is None):
        parser.error("--t/--curve: exactly one is required")
    if args.curve is not None:
        try:
            t0s, t1s, steps_s = args.curve.split(":")
            t0, t1, steps = float(t0s), float(t1s), int(steps_s)
        except ValueError:
            parser.error("--curve: expected T0:T1:STEPS")
        if steps < 1 or not 0 < t0 <= t1:
            parser.error("--curve: need 0 < T0 <= T1 and STEPS >= 1")
        ts = np.linspace(t0, t1, steps)
    else:
        if not args.t > 0:
            parser.error("--t: must be positive")
        ts = [args.t]
    params = {"regime": regime.__class__.__name__}
    if isinstance(regime, RationalRegime):
        params.update(p=regime.p, q=regime.q, k=regime.k)
    else:
        params.update(L=regime.L)
    params["variance_rate"] = density.variance_rate
    config = RunConfig("rho", _resolve_format(args, len(ts) > 1), args.output,
                       _resolve_seed(args), args.tol, params=params)
    rows = [
        {"t": float(t), "rho": density.density(float(t)), "corr": density.correlation(float(t))}
        for t in ts
    ]
    _write_output(config, rows)
    return 0


def _kind_row(kind) -> dict:
    if isinstance(kind, RationalFiniteK):
        return {"kind": "RationalFiniteK", "p": kind.p, "q": kind.q, "k": float(kind.k)}
    if isinstance(kind, AveragedLimit):
        return {"kind": "Averaged", "L": float(kind.L), "reason": kind.reason}
    if isinstance(kind, DegenerateLimit):
        return {"kind": "Degenerate", "limit": "inf" if kind.limit == math.inf else 0}
    if isinstance(kind, UndeterminedLimit):
        return {"kind": "Undetermined", "diagnostics": kind.diagnostics}
    raise AssertionError(kind)


def _cmd_classify(args, parser) -> int:
    try:
        expr_a = parse_seq(args.a)
    except ParseError as exc:
        parser.error(f"--a: {exc}")
    try:
        expr_b = parse_seq(args.b)
    except ParseError as exc:
        parser.error(f"--b: {exc}")
    try:
        lc = classify(expr_a, expr_b, args.n_probe)
    except NotMonotone as exc:
        parser.error(f"--a/--b: {exc}")
    except OverflowError as exc:
        parser.error(f"--a/--b: {exc}")
    config = RunConfig("classify", _resolve_format(args, False), args.output,
                       _resolve_seed(args), args.tol,
                       params={"a": args.a, "b": args.b, "n_probe": args.n_probe})
    row = _kind_row(lc.kind)
    row["evidence"] = [
        {"n": r.n, "a": r.a, "b": r.b, "ratio": str(r.ratio),
         "drift": None if r.drift is None else str(r.drift), "gcd": r.gcd}
        for r in lc.evidence
    ]
    if config.output_format == "csv":
        # CSV carries the evidence table; the classification itself is metadata
        config.params.update(_kind_row(lc.kind))
        _write_output(config, row["evidence"])
    else:
        _write_output(config, [row])
    return 0


def _cmd_exact_cov(args, parser) -> int:
    if args.a < 1 or args.b < 1:
        parser.error("--a/--b: must be positive integers")
    if math.floor(args.a * args.t) < 1 or math.floor(args.b * args.t) < 1:
        parser.error("--t: no whole increment fits on one of the grids")
    if math.floor(args.a * args.t) * math.floor(args.b * args.t) > EXACT_PAIR_CAP:
        parser.error(f"--a/--b/--t: increment-pair count exceeds {EXACT_PAIR_CAP}")
    report = covariance_report(args.a, args.b, args.t)
    config = RunConfig("exact-cov", _resolve_format(args, False), args.output,
                       _resolve_seed(args), args.tol,
                       params={"a": args.a, "b": args.b, "t": args.t})
    _write_output(config, [{
        "a": report.a, "b": report.b, "t": report.t, "cov": report.cov,
        "var_a": report.var_a, "var_b": report.var_b, "corr": report.corr,
    }])
    return 0


def _cmd_simulate(args, parser) -> int:
    if args.a < 1 or args.b < 1:
        parser.error("--a/--b: must be positive integers")
    if args.reps < 2:
        parser.error("--reps: need at least 2 replicas")
    N = math.lcm(args.a, args.b)
    if N * args.t > GRID_POINT_CAP:
        parser.error(f"--a/--b: lcm(a,b)*t = {N * args.t:g} exceeds the {GRID_POINT_CAP} grid cap")
    if math.floor(args.a * args.t) < 1 or math.floor(args.b * args.t) < 1:
        parser.error("--t: no whole increment fits on one of the grids")
    seed = _resolve_seed(args)
    est = mc_corr(args.a, args.b, args.t, args.reps, seed)
    row = {
        "a": args.a, "b": args.b, "t": args.t, "replicas": est.replicas,
        "mc_corr": est.mean, "std_error": est.std_error,
        "exact_corr": None, "abs_diff": None, "within_3se": None,
    }
    pairs = math.floor(args.a * args.t) * math.floor(args.b * args.t)
    if pairs <= EXACT_PAIR_CAP:
        exact = covariance_report(args.a, args.b, args.t).corr
        row["exact_corr"] = exact
        row["abs_diff"] = abs(est.mean - exact)
        row["within_3se"] = abs(est.mean - exact) <= 3.0 * est.std_error
    config = RunConfig("simulate", _resolve_format(args, False), args.output,
                       seed, args.tol,
                       params={"a": args.a, "b": args.b, "t": args.t,
                               "reps": args.reps, "grid": N})
    _write_output(config, [row])
    return 0


def _cmd_xrho(args, parser) -> int:
    if math.gcd(args.p, args.q) != 1:
        parser.error(f"--p/--q: {args.p}/{args.q} is not in lowest terms")
    if args.k < 0:
        parser.error("--k: must be nonnegative")
    if args.steps < 1 or args.reps < 2 or not args.T > 0:
        parser.error("--steps/--reps/--T: need steps >= 1, reps >= 2, T > 0")
    seed = _resolve_seed(args)
    density = make_density(RationalRegime(args.p, args.q, args.k), args.tol)
    ens = sim_limit_pair(density, args.T, args.steps, args.reps, seed)
    terminal = ens.paths[:, -1, :]
    row = {"p": args.p, "q": args.q, "k": args.k, "T": args.T,
           "steps": args.steps, "replicas": args.reps}
    for coord in (0, 1):
        x = terminal[:, coord]
        dev = (x - x.mean()) ** 2
        row[f"var_{coord}"] = float(np.mean(dev))
        row[f"se_var_{coord}"] = float(np.std(dev, ddof=1)) / math.sqrt(args.reps)
    prod = terminal[:, 0] * terminal[:, 1]
    row["cov"] = float(np.mean(prod)) - float(terminal[:, 0].mean()) * float(terminal[:, 1].mean())
    row["se_cov"] = float(np.std(prod, ddof=1)) / math.sqrt(args.reps)
    row["predicted_var"] = density.variance_rate * args.T
    row["predicted_cov"] = density.integral(args.T)
    config = RunConfig("xrho", _resolve_format(args, False), args.output,
                       seed, args.tol,
                       params={"p": args.p, "q": args.q, "k": args.k, "T": args.T,
                               "steps": args.steps, "reps": args.reps})
    _write_output(config, [row])
    return 0


def _cmd_verify(args, parser) -> int:
    seed = _resolve_seed(args)
    results = checks.run_all(seed=seed, fast=args.fast)
    width = max(len(r.title) for r in results)
    print(f"verification suite (seed={seed:#x}, fast={args.fast})")
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"  {r.ident:<4} {status}  {r.title:<{width}}  [{r.elapsed:7.2f}s < {r.budget:4.0f}s]")
        print(f"       {r.detail}")
    failed = [r.ident for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed"
          + (f"; failing: {', '.join(failed)}" if failed else ""))
    if args.output:
        config = RunConfig("verify", args.format or "csv", args.output, seed, args.tol,
                           params={"fast": args.fast})
        rows = [{"ident": r.ident, "title": r.title,
                 "status": "PASS" if r.passed else "FAIL",
                 "elapsed_s": r.elapsed, "budget_s": r.budget, "detail": r.detail}
                for r in results]
        _write_output(config, rows)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cubicvar",
        description="Asymptotic correlation of cubic-variation sums of rough fBm.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="output format (default: csv for tables, json otherwise)")
        p.add_argument("--output", default=None, help="write output to this path")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL,
                       help="numeric tolerance (default 1e-7)")
        p.add_argument("--seed", type=lambda s: int(s, 0), default=None,
                       help="RNG seed (default: CUBICVAR_SEED or 0xC0FFEE)")

    p = sub.add_parser("kappa", help="variance constant of the limit Brownian motion")
    common(p)
    p.set_defaults(func=_cmd_kappa)

    p = sub.add_parser("fl", help="kernel values for a fixed ratio")
    p.add_argument("--L", required=True, help="ratio limit: p/q (exact) or decimal")
    p.add_argument("--at", type=float, default=None, help="evaluate at one point")
    p.add_argument("--grid", type=int, default=None, help="evaluate at j/N, j=0..N")
    p.add_argument("--assume-rational", action="store_true",
                   help="recognize a decimal as rational (denominator <= 1e6)")
    common(p)
    p.set_defaults(func=_cmd_fl)

    p = sub.add_parser("rho", help="covariance density and correlation curve")
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--k", type=float, default=None)
    p.add_argument("--L", default=None, help="averaged regime with this ratio limit")
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--curve", default=None, metavar="T0:T1:STEPS")
    p.add_argument("--assume-rational", action="store_true")
    common(p)
    p.set_defaults(func=_cmd_rho)

    p = sub.add_parser("classify", help="classify an integer-sequence pair")
    p.add_argument("--a", required=True, help="sequence expression in n")
    p.add_argument("--b", required=True, help="sequence expression in n")
    p.add_argument("--n-probe", type=int, default=512)
    common(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("exact-cov", help="exact covariance of the variation-sum pair")
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    common(p)
    p.set_defaults(func=_cmd_exact_cov)

    p = sub.add_parser("simulate", help="Monte Carlo correlation vs the exact oracle")
    p.add_argument("--a", type=int, required=True)
    p.add_argument("--b", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--reps", type=int, required=True)
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("xrho", help="simulate the correlated limit pair")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    common(p)
    p.set_defaults(func=_cmd_xrho)

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--fast", action="store_true", help="smaller replica counts")
    common(p)
    p.set_defaults(func=_cmd_verify)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.subcommand == "fl" and (args.at is None) == (args.grid is None):
        parser.error("--at/--grid: exactly one is required")
    try:
        return args.func(args, parser)
    except NUMERIC_ERRORS as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except InvalidGrid as exc:
        parser.error(str(exc))


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
