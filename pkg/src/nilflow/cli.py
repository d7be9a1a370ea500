"""Command-line interface.

Exit codes: 0 success, 1 a checked criterion failed, 2 usage or input error,
3 numerical breakdown. Relative ``--out`` paths are placed under
``$NILFLOW_OUTPUT_DIR`` when it is set; without ``--out`` results go to stdout.
Basis indices on the command line and in files are 1-based.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import __version__
from .algebra import detect_family, heisenberg, unitriangular, validate
from .asymptotics import DEFAULT_THRESHOLD, deviations_per_decade, log_grid, predict, ratio_convergence
from .curvature import curvature_bundle, sectional
from .errors import DegeneratePlaneError, FlowBreakdownError, NilflowError, UnsupportedAlgebraError
from .experiments import EXPERIMENTS, ExperimentConfig, run
from .flow import MODES, FlowProblem, conserved, integrate, sample_times
from .io import OUTPUT_DIR_ENV, dumps, load_algebra, load_metric, read_json, save_algebra, write_json, write_trajectory
from .soliton import lauret_certify, soliton_heisenberg, soliton_unitriangular

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BREAKDOWN = 0, 1, 2, 3
FAMILIES = {"heisenberg": heisenberg, "unitriangular": unitriangular}

log = logging.getLogger("nilflow")


class UsageError(Exception):
    pass


def _emit(obj, out):
    if out is None:
        sys.stdout.write(dumps(obj))
    else:
        path = write_json(obj, out)
        log.info("wrote %s", path)


def _cmd_algebra_gen(args):
    spec = FAMILIES[args.family](args.n)
    if args.out is None:
        sys.stdout.write(dumps(spec.to_dict()))
    else:
        log.info("wrote %s", save_algebra(spec, args.out))
    return EXIT_OK


def _cmd_algebra_validate(args):
    spec = load_algebra(args.file)
    rep = validate(spec, tol=args.tol)
    out = rep.to_dict()
    fam = detect_family(spec)
    out["family"] = None if fam is None else {"name": fam[0], "n": fam[1]}
    _emit(out, args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _load_pair(args):
    spec = load_algebra(args.algebra)
    g = load_metric(args.metric)
    if g.dim != spec.dim:
        raise UsageError(f"metric has dimension {g.dim} but the algebra has {spec.dim}")
    return spec, g


def _cmd_curvature(args):
    spec, g = _load_pair(args)
    bundle = curvature_bundle(spec, g, riemann=args.riemann)
    out = bundle.to_dict()
    out["basis"] = list(spec.basis_labels)
    if args.sectional:
        i, j = args.sectional
        if not (1 <= i <= spec.dim and 1 <= j <= spec.dim):
            raise UsageError(f"--sectional indices must lie in 1..{spec.dim}")
        try:
            K = sectional(spec, g, i - 1, j - 1)
        except DegeneratePlaneError:
            raise UsageError(f"the plane spanned by e_{i} and e_{j} is degenerate") from None
        out["sectional"] = {"i": i, "j": j, "K": K}
    _emit(out, args.out)
    return EXIT_OK


def _auto_mode(spec, g, requested):
    if requested != "auto":
        return requested
    fam = detect_family(spec)
    if fam is not None and g.is_diagonal:
        return f"{fam[0]}_diag"
    return "general"


def _cmd_flow(args):
    spec, g = _load_pair(args)
    mode = _auto_mode(spec, g, args.mode)
    prob = FlowProblem(spec, g, (args.t0, args.t1), rtol=args.rtol, atol=args.atol, rhs_mode=mode)
    times = sample_times(args.t0, args.t1, args.samples, args.spacing)
    traj = integrate(prob, times)
    if args.out is None:
        sys.stdout.write(",".join(["t"] + traj.column_names()) + "\n")
        for row in traj.rows():
            sys.stdout.write(",".join(repr(float(x)) for x in row) + "\n")
    else:
        log.info("wrote %s", write_trajectory(traj, args.out))
    log.info("mode %s, %s", mode, traj.step_stats)
    return EXIT_OK


def _cmd_asymptotics(args):
    spec, g = _load_pair(args)
    fam = detect_family(spec)
    if fam is None or fam[0] != "heisenberg":
        raise UnsupportedAlgebraError("asymptotics needs a Heisenberg algebra")
    if not g.is_diagonal:
        raise UsageError("asymptotics needs a diagonal metric")
    if not 0 < args.t_mid < args.t_end:
        raise UsageError("need 0 < --t-mid < --t-end")
    n = fam[1]
    grid = np.unique(np.concatenate([[0.0], log_grid(1e-3, args.t_end), [args.t_mid]]))
    prob = FlowProblem(spec, g, (0.0, args.t_end), rtol=args.rtol, atol=args.atol, rhs_mode="heisenberg_diag")
    traj = integrate(prob, grid)
    prof = predict(n, g.diag)
    rep = ratio_convergence(traj, prof, (args.t_mid, args.t_end), args.threshold)
    passed = rep.passed and rep.improving
    _emit({
        "profile": prof.to_dict(),
        "window": rep.to_dict(),
        "per_decade": deviations_per_decade(traj, prof),
        "conserved_drift": conserved(traj).to_dict(),
        "steps": traj.step_stats,
        "pass": passed,
    }, args.out)
    return EXIT_OK if passed else EXIT_FAIL


def _cmd_soliton(args):
    if args.t <= 0:
        raise UsageError("--t must be positive")
    if args.family == "heisenberg":
        g = soliton_heisenberg(args.n, args.t)
    else:
        g = soliton_unitriangular(args.n, args.t, args.A)
    spec = FAMILIES[args.family](args.n)
    out = {"family": args.family, "n": args.n, "t": args.t, "basis": list(spec.basis_labels), "metric": g.to_dict()}
    if args.family == "unitriangular":
        out["A"] = args.A
    ok = True
    if args.certify:
        cert = lauret_certify(spec, g)
        out["certificate"] = cert.to_dict()
        ok = cert.valid
    _emit(out, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def _cmd_experiment(args):
    if args.config:
        cfg = ExperimentConfig.from_dict(read_json(args.config))
    elif args.name:
        cfg = ExperimentConfig(args.name)
    else:
        raise UsageError("give an experiment name or --config")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    report = run(cfg)
    if cfg.out_dir is None:
        sys.stdout.write(dumps(report))
    for name, ok in report.criteria.items():
        log.info("%s %s", "PASS" if ok else "FAIL", name)
    return EXIT_OK if report.passed else EXIT_FAIL


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nilflow",
        description="Ricci flow on nilpotent Lie groups with left-invariant metrics.",
        epilog=f"Relative --out paths go under ${OUTPUT_DIR_ENV} when set. "
               "Exit codes: 0 ok, 1 criterion failed, 2 usage error, 3 numerical breakdown.",
    )
    p.add_argument("--version", action="version", version=f"nilflow {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    # SUPPRESS keeps subparser defaults from overwriting a -v given before the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    alg = sub.add_parser("algebra", help="generate or validate structure constants")
    asub = alg.add_subparsers(dest="action", required=True)
    gen = asub.add_parser("gen", parents=[common], help="write the structure constants of a standard family")
    gen.add_argument("--family", choices=sorted(FAMILIES), required=True)
    gen.add_argument("--n", type=_positive_int, required=True,
                     help="Heisenberg: dimension 2n+1; unitriangular: n x n matrices")
    gen.add_argument("--out", help="algebra JSON path (stdout if omitted)")
    gen.set_defaults(func=_cmd_algebra_gen)
    val = asub.add_parser("validate", parents=[common], help="check antisymmetry, Jacobi identity and nilpotency")
    val.add_argument("file", help="algebra JSON")
    val.add_argument("--tol", type=float, default=1e-12, help="Jacobi residual tolerance")
    val.add_argument("--out", help="report JSON path (stdout if omitted)")
    val.set_defaults(func=_cmd_algebra_validate)

    cur = sub.add_parser("curvature", parents=[common], help="Christoffel symbols, Ricci, scalar and optional Riemann")
    cur.add_argument("--algebra", required=True)
    cur.add_argument("--metric", required=True)
    cur.add_argument("--riemann", action="store_true", help="include the full Riemann tensor")
    cur.add_argument("--sectional", nargs=2, type=int, metavar=("I", "J"),
                     help="sectional curvature of the plane e_I ^ e_J (1-based)")
    cur.add_argument("--out", help="JSON path (stdout if omitted)")
    cur.set_defaults(func=_cmd_curvature)

    fl = sub.add_parser("flow", parents=[common], help="integrate dg/dt = -2 Ric")
    fl.add_argument("--algebra", required=True)
    fl.add_argument("--metric", required=True)
    fl.add_argument("--t0", type=float, default=0.0)
    fl.add_argument("--t1", type=float, required=True)
    fl.add_argument("--rtol", type=float, default=1e-10)
    fl.add_argument("--atol", type=float, default=1e-12)
    fl.add_argument("--samples", type=_positive_int, default=101, help="number of output times")
    fl.add_argument("--spacing", choices=["linear", "log"], default="linear")
    fl.add_argument("--mode", choices=("auto",) + MODES, default="auto",
                    help="right-hand side; auto picks a diagonal fast path when one applies")
    fl.add_argument("--out", help="trajectory .csv or .json (CSV on stdout if omitted)")
    fl.set_defaults(func=_cmd_flow)

    asy = sub.add_parser("asymptotics", parents=[common], help="compare a Heisenberg solution with its predicted power law")
    asy.add_argument("--algebra", required=True)
    asy.add_argument("--metric", required=True)
    asy.add_argument("--t-end", type=float, default=1e6)
    asy.add_argument("--t-mid", type=float, default=1e4, help="start of the comparison window")
    asy.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    asy.add_argument("--rtol", type=float, default=1e-10)
    asy.add_argument("--atol", type=float, default=1e-12)
    asy.add_argument("--out", help="report JSON path (stdout if omitted)")
    asy.set_defaults(func=_cmd_asymptotics)

    sol = sub.add_parser("soliton", parents=[common], help="explicit soliton metric, optionally certified")
    sol.add_argument("--family", choices=sorted(FAMILIES), required=True)
    sol.add_argument("--n", type=_positive_int, required=True)
    sol.add_argument("--A", type=float, default=1.0, help="unitriangular scale parameter")
    sol.add_argument("--t", type=float, default=1.0)
    sol.add_argument("--certify", action="store_true", help="check Ric = cI + D")
    sol.add_argument("--out", help="JSON path (stdout if omitted)")
    sol.set_defaults(func=_cmd_soliton)

    ex = sub.add_parser("experiment", parents=[common], help="run a named reproducibility experiment")
    ex.add_argument("name", nargs="?", choices=sorted(EXPERIMENTS))
    ex.add_argument("--config", help="experiment config JSON")
    ex.add_argument("--seed", type=int)
    ex.add_argument("--out", help="output directory for the report and artifacts (stdout if omitted)")
    ex.set_defaults(func=_cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except FlowBreakdownError as exc:
        print(f"nilflow: flow breakdown: {exc}", file=sys.stderr)
        return EXIT_BREAKDOWN
    except (UsageError, NilflowError, OSError, ValueError) as exc:
        print(f"nilflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
