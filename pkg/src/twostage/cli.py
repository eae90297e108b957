"""Command-line interface.

Exit codes: 0 ok, 1 a validation check failed, 2 bad input or arguments,
3 data rejected by the model (selection mismatch, degenerate data).
Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

import numpy as np

from . import io as tio
from . import oracle, simulate
from ._backend import BACKEND
from .errors import DegenerateData, EmptyGrid, InvalidDesign, SelectionMismatch, TwoStageError
from .estimators import PAPER_FOUR, EstimatorId, bayes
from .model import DesignConfig, ParameterPoint, TwoStageDataset, summarize, validate_dataset

log = logging.getLogger("twostage")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 2
EXIT_MODEL = 3


class UsageError(Exception):
    pass


def _estimator_list(text):
    try:
        ests = tuple(EstimatorId.parse(tok) for tok in text.split(",") if tok.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    if not ests:
        raise argparse.ArgumentTypeError("no estimators given")
    return ests


def _float_list(text):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive_int(text):
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _design(n1, n2):
    try:
        return DesignConfig(n1, n2)
    except InvalidDesign as exc:
        raise UsageError(str(exc))


def _emit(text, out_path=None):
    if out_path in (None, "-"):
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# -- subcommands ----------------------------------------------------------------


def cmd_estimate(args):
    try:
        data, cfg = tio.load_dataset(args.stage1, args.stage2)
    except tio.ParseError as exc:
        raise UsageError(str(exc))
    except InvalidDesign as exc:
        raise UsageError(f"{args.stage1}, {args.stage2}: {exc}")
    if args.arm is not None:
        data = TwoStageDataset(data.arm1, data.arm2, data.stage2, args.arm)
    validate_dataset(data, cfg)
    s = summarize(data, cfg)
    ests = PAPER_FOUR + ((bayes(args.bayes_m),) if args.bayes_m else ())
    report = tio.build_report(s, cfg, ests, float(np.mean(data.arm1)), float(np.mean(data.arm2)))
    _emit(tio.dumps(report) if args.format == "json" else tio.report_csv(report))


def _risk_rows(report, axis):
    return [(axis, label, r.scaled_mse, r.scaled_mse_se, r.scaled_bias, r.scaled_bias_se)
            for label, r in report.estimators.items()]


def cmd_simulate(args):
    cfg = _design(args.n1, args.n2)
    if args.mu < 0:
        raise UsageError("--mu is a normalized gap and must be >= 0")
    job = simulate.SimulationJob(cfg, ParameterPoint(0.0, args.mu, 1.0), args.reps, args.seed,
                                 args.estimators)
    t0 = time.perf_counter()
    report = simulate.estimate_risk(job, workers=args.workers)
    log.info("simulated %d replications in %.2fs (%s kernel)", args.reps, time.perf_counter() - t0, BACKEND)
    if args.format == "json":
        _emit(tio.dumps(report.to_dict()))
    else:
        rows = sorted(_risk_rows(report, report.mu_norm), key=lambda r: EstimatorId.parse(r[1]))
        _emit(tio.sweep_csv(rows))


def cmd_sweep(args):
    try:
        if args.mode == "mu":
            cfg = _design(args.n1, args.n2)
            grid = args.mu_grid if args.mu_grid is not None else list(simulate.DEFAULT_MU_GRID)
            result = simulate.sweep_mu(cfg, grid, args.reps, args.seed, args.estimators, args.workers)
        else:
            if args.n_total is None:
                raise UsageError("--n-total is required for --mode fraction")
            mu = args.mu if args.mu is not None else 0.0
            result = simulate.sweep_information_fraction(args.n_total, mu, args.reps, args.seed,
                                                         args.estimators, args.workers)
    except (EmptyGrid, ValueError) as exc:
        raise UsageError(str(exc))
    _emit(tio.sweep_csv(result.rows()), args.out)


def cmd_validate(args):
    ok = True
    t0 = time.perf_counter()
    checks = oracle.correction_grid_check(rel_tol=args.rel_tol, abs_tol=args.abs_tol)
    bad = [c for c in checks if not c.passed]
    worst = max(checks, key=lambda c: c.abs_err)
    status = "PASS" if not bad else "FAIL"
    print(f"{status} correction closed form vs quadrature: {len(checks) - len(bad)}/{len(checks)} grid points "
          f"(worst rel {worst.rel_err:.3g}, abs {worst.abs_err:.3g} at v*={worst.v_star}, c={worst.c})")
    for c in bad:
        print(f"    v*={c.v_star} c={c.c}: closed {c.closed_form!r} quad {c.quadrature!r}")
    ok &= not bad
    if args.level == "full":
        cfg = DesignConfig(5, 5)
        for mu in (0.0, 1.0):
            params = ParameterPoint(0.0, mu, 1.0)
            rep = oracle.conditional_unbiasedness_check(params, cfg, args.reps, args.seed, workers=args.workers)
            for arm, ab in rep.arms.items():
                passed = rep.within(arm)
                ok &= passed
                print(f"{'PASS' if passed else 'FAIL'} UMVCUE conditional bias mu={mu} arm {arm}: "
                      f"{ab.bias:+.5f} (se {ab.se:.5f}, n={ab.count})")
        rep = oracle.mle_selection_bias(ParameterPoint(0.0, 0.0, 1.0), cfg, args.reps, args.seed, args.workers)
        detected = all(ab.z_score > rep.threshold for ab in rep.arms.values())
        ok &= detected
        print(f"{'PASS' if detected else 'FAIL'} MLE selection bias detected at mu=0: "
              + ", ".join(f"arm {a} z={ab.z_score:.1f}" for a, ab in rep.arms.items()))
    log.info("validation finished in %.1fs", time.perf_counter() - t0)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# -- parser ---------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="twostage",
        description="Estimate the selected arm mean in a two-stage adaptive design.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate from stage-1 and stage-2 CSV files")
    p.add_argument("stage1", help="CSV with header 'arm,value'")
    p.add_argument("stage2", help="CSV with header 'value'")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--bayes-m", type=_positive_int, default=None,
                   help="also report the Bayes shrinkage estimator with this m")
    p.add_argument("--arm", type=int, choices=(1, 2), default=None,
                   help="arm the stage-2 data came from; checked against the selection rule")
    p.set_defaults(func=cmd_estimate)

    def add_sim_flags(p):
        p.add_argument("--reps", type=_positive_int, default=simulate.DEFAULT_REPS)
        p.add_argument("--seed", type=_seed, default=0)
        p.add_argument("--estimators", type=_estimator_list, default=PAPER_FOUR,
                       help="comma list of MLE, UMVCUE, PLUGIN_U1, PLUGIN_U2, BAYES_M(m)")
        p.add_argument("--workers", type=_positive_int, default=None,
                       help=f"worker threads (default ${simulate.WORKERS_ENV} or CPU count)")

    p = sub.add_parser("simulate", help="Monte-Carlo scaled MSE and bias at one parameter point")
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.add_argument("--mu", type=float, default=0.0, help="normalized mean gap (>= 0)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    add_sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="risk curves over mu or over the information fraction")
    p.add_argument("--mode", choices=("mu", "fraction"), required=True)
    p.add_argument("--n1", type=int, default=5)
    p.add_argument("--n2", type=int, default=5)
    p.add_argument("--mu-grid", type=_float_list, default=None, help="comma list of mu values (mode mu)")
    p.add_argument("--n-total", type=int, default=None, help="n1 + n2 (mode fraction)")
    p.add_argument("--mu", type=float, default=None, help="normalized gap (mode fraction)")
    p.add_argument("--out", default="-", help="output CSV path, '-' for stdout")
    add_sim_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="run the oracle checks")
    p.add_argument("--level", choices=("quick", "full"), default="quick")
    p.add_argument("--reps", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=_seed, default=20240601)
    p.add_argument("--workers", type=_positive_int, default=None)
    p.add_argument("--rel-tol", type=float, default=1e-8, help=argparse.SUPPRESS)
    p.add_argument("--abs-tol", type=float, default=1e-12, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        code = args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SelectionMismatch, DegenerateData) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (TwoStageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
