"""Experiment command line.

Subcommands: solve, fixture, fit-class, matrix-probe, sweep-theta.
Exit codes: 0 ok, 1 usage, 2 config, 3 assertion or fact failure,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np
import scipy.linalg

from . import lab
from .algorithms import AlgorithmConfig, check_cardinality_bounds, run
from .config import ConfigError, load_config
from .core import SpectralVector, ball_offsets
from .galerkin import NonConvergenceError, SolveError
from .operators import (NonCoerciveError, certify_decay, inverse_decay_rate,
                        truncation_bound, window_matrix)
from .plots import trace_figure
from .sparsity import InsufficientDataError, fit_class

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_ASSERTION = 3
EXIT_NUMERICAL = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="spectraladapt",
                description="adaptive spectral Galerkin experiments")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run one adaptive solve from a config")
    s.add_argument("config")
    s.add_argument("--theta", type=float)
    s.add_argument("--tol", type=float)
    s.add_argument("--algorithm")
    s.add_argument("--gamma", type=float)
    s.add_argument("--out", default="run")

    f = sub.add_parser("fixture", help="build a named fixture and verify it")
    f.add_argument("name")
    f.add_argument("params", nargs=argparse.REMAINDER,
                   help="--out DIR and fixture parameters as --key value")

    c = sub.add_parser("fit-class", help="fit a sparsity class to a vector")
    c.add_argument("vector_file")
    c.add_argument("--kind", choices=["algebraic", "exponential"],
                   required=True)

    m = sub.add_parser("matrix-probe",
                       help="decay certificate, truncation table, inverse rate")
    m.add_argument("config")
    m.add_argument("--window", type=int, default=100)
    m.add_argument("--J-max", dest="j_max", type=int, default=10)

    w = sub.add_parser("sweep-theta", help="run one problem over several theta")
    w.add_argument("config")
    w.add_argument("--thetas", required=True)
    w.add_argument("--out", default="sweep")
    return p


def _parse_fixture_params(tokens: list[str]) -> dict:
    params = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise _UsageError(f"expected --key value, got {tok!r}")
        if i + 1 >= len(tokens):
            raise _UsageError(f"missing value for {tok}")
        key = tok[2:].replace("-", "_")
        raw = tokens[i + 1]
        if "," in raw:
            params[key] = tuple(_num(v) for v in raw.split(","))
        else:
            params[key] = _num(raw)
        i += 2
    return params


def _num(text: str):
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            return text


def _cmd_solve(args) -> int:
    problem, config = load_config(args.config)
    for key, attr in (("theta", "theta"), ("tol", "tol"), ("gamma", "gamma")):
        val = getattr(args, key)
        if val is not None:
            setattr(config, attr, val)
    if args.algorithm:
        config.variant = args.algorithm.replace("-", "_")
    config.__post_init__()
    trace = run(problem, config)
    csv_path = f"{args.out}.csv"
    trace.save_csv(csv_path)
    fig_path = trace_figure({config.variant: trace}, f"{args.out}.png")
    print(f"variant={config.variant} theta={config.theta} "
          f"predicted_rho={trace.predicted_rho:.4g}")
    print(f"iterations={len(trace.rows) - 1} final_residual="
          f"{trace.rows[-1].residual_norm:.6g} termination={trace.termination}")

    report_lines = [f"predicted contraction factor: {trace.predicted_rho:.6g}"]
    ratios = trace.energy_ratios()
    if ratios:
        report_lines.append(f"max energy-error ratio:      {max(ratios):.6g}")
    try:
        exact = problem.exact
        if exact is not None and len(exact) >= 8:
            fit = fit_class(exact, "exponential", d=problem.operator.d)
            report = check_cardinality_bounds(
                trace, fit, problem.operator.alpha_star,
                problem.operator.alpha_upper)
            report_lines.append(str(report))
    except InsufficientDataError:
        pass
    with open(f"{args.out}_bounds.txt", "w") as fh:
        fh.write("\n".join(report_lines) + "\n")
    print(f"wrote {csv_path}, {fig_path}, {args.out}_bounds.txt")
    if trace.flagged:
        print("run flagged: " + "; ".join(trace.notes), file=sys.stderr)
        return EXIT_ASSERTION
    return EXIT_OK


def _cmd_fixture(args) -> int:
    params = _parse_fixture_params(args.params)
    out_dir = params.pop("out", None)
    try:
        result = lab.fixture(args.name, **params)
    except lab.UnknownFixtureError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    print(result.report())
    if out_dir:
        import os
        os.makedirs(out_dir, exist_ok=True)
        for key, obj in result.objects.items():
            if isinstance(obj, SpectralVector):
                obj.save(os.path.join(out_dir, f"{key}.vec"))
        with open(os.path.join(out_dir, "facts.txt"), "w") as fh:
            fh.write(result.report() + "\n")
    return EXIT_OK if result.passed else EXIT_ASSERTION


def _cmd_fit_class(args) -> int:
    vec = SpectralVector.load(args.vector_file)
    fit = fit_class(vec, args.kind, d=vec.d)
    print(fit.summary())
    return EXIT_OK


def _cmd_matrix_probe(args) -> int:
    problem, _ = load_config(args.config)
    op = problem.operator
    cert = certify_decay(op)
    print(cert.summary())
    if math.isinf(cert.eta):
        print("diagonal operator: truncation error is identically zero")
        return EXIT_OK
    radius = args.window // 2
    modes = ball_offsets(op.d, radius)
    a_full = window_matrix(op, modes)
    k = np.array(modes, dtype=float)
    dist = np.linalg.norm(k[:, None, :] - k[None, :, :], axis=2)
    print("J  measured_norm  bound")
    for j in range(args.j_max + 1):
        diff = np.where(dist > j, a_full, 0.0 * a_full)
        measured = scipy.linalg.norm(diff, 2)
        bound = truncation_bound(cert, j, op.d)
        print(f"{j:<3d}{measured:<15.6g}{bound:.6g}")
        if measured > bound * (1 + 1e-9):
            print("truncation bound violated", file=sys.stderr)
            return EXIT_ASSERTION
    res = inverse_decay_rate(cert.c, cert.eta, cert.diag_min)
    if res.accepted:
        print(f"inverse decay: accepted rate={res.rate:.6g} root={res.root:.6g}")
    else:
        print(f"inverse decay: rejected ({res.reason})")
    return EXIT_OK


def _cmd_sweep_theta(args) -> int:
    problem, config = load_config(args.config)
    try:
        thetas = [float(t) for t in args.thetas.split(",") if t]
    except ValueError:
        raise _UsageError(f"bad theta list {args.thetas!r}")
    if not thetas:
        raise _UsageError("no thetas given")
    traces = {}
    for theta in thetas:
        cfg = AlgorithmConfig(variant=config.variant, theta=theta,
                              tol=config.tol, gamma=config.gamma,
                              enrichment_radius=config.enrichment_radius,
                              max_outer=config.max_outer)
        trace = run(problem, cfg)
        label = f"theta={theta:g}"
        traces[label] = trace
        path = f"{args.out}_theta{theta:g}.csv"
        trace.save_csv(path)
        print(f"{label}: iterations={len(trace.rows) - 1} "
              f"final_residual={trace.rows[-1].residual_norm:.6g} -> {path}")
    fig = trace_figure(traces, f"{args.out}.png",
                       title=problem.label or "theta sweep")
    print(f"wrote {fig}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "fixture":
            return _cmd_fixture(args)
        if args.command == "fit-class":
            return _cmd_fit_class(args)
        if args.command == "matrix-probe":
            return _cmd_matrix_probe(args)
        if args.command == "sweep-theta":
            return _cmd_sweep_theta(args)
        raise _UsageError(f"unknown command {args.command!r}")
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolveError, NonConvergenceError, NonCoerciveError,
            scipy.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
