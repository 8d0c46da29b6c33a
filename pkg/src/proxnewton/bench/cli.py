"""``proxnewton`` command line.

Subcommands::

    proxnewton run <spec.ini> [--out DIR] [--seed N] [--solvers pg,pn,ln,hlqn,hlqn-gcr]
                              [--lambda V] [--nu V] [--tol V]
    proxnewton audit <spec.ini> --samples N
    proxnewton rate <trace.csv>
    proxnewton expand <libsvm-in> <out.npz>

Exit codes: 0 success, 1 usage error, 2 solver or audit failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import os
import logging
import sys
from pathlib import Path

from ..dataio import ParseError, poly_expand, read_libsvm, save_dataset
from ..solvers import Status
from .experiment import SOLVER_NAMES, audit_problem, load_spec, run_experiment, with_overrides
from .outputs import read_trace_csv
from .rates import estimate_rate

EXIT_OK, EXIT_USAGE, EXIT_FAILURE, EXIT_IO = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _solver_list(text: str):
    names = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in names if s not in SOLVER_NAMES]
    if not names or bad:
        raise argparse.ArgumentTypeError(f"choose from {','.join(SOLVER_NAMES)}")
    return names


def _lambda(text: str):
    if text == "max":
        return text
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError("lambda must be nonnegative")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="proxnewton", description="Newton-type solvers for regularized problems.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a solver comparison")
    r.add_argument("spec")
    r.add_argument("--out")
    r.add_argument("--seed", type=int)
    r.add_argument("--solvers", type=_solver_list)
    r.add_argument("--lambda", dest="lam", type=_lambda, help="a number or 'max'")
    r.add_argument("--nu", type=float)
    r.add_argument("--tol", type=float)

    a = sub.add_parser("audit", help="eigenvalue, prox-Jacobian and gradient checks")
    a.add_argument("spec")
    a.add_argument("--samples", type=int, default=20)

    t = sub.add_parser("rate", help="classify the convergence order of a trace CSV")
    t.add_argument("trace")

    e = sub.add_parser("expand", help="polynomial group features from a LIBSVM file")
    e.add_argument("source")
    e.add_argument("out")
    e.add_argument("--no-standardize", action="store_true")
    return p


def _load(path):
    try:
        return load_spec(path)
    except FileNotFoundError:
        raise
    except (ValueError, KeyError) as exc:
        raise _UsageError(f"{path}: {exc}") from None


def _cmd_run(args) -> int:
    spec = _load(args.spec)
    try:
        spec = with_overrides(spec, out=args.out, seed=args.seed, solvers=args.solvers,
                              lam=args.lam, nu=args.nu, tol=args.tol)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    traces = run_experiment(spec, out_dir=args.out)
    failed = False
    for name, tr in traces.items():
        last = f"{tr.records[-1].residual:.3e}" if tr.records else "-"
        print(f"{name:<9} {tr.status.value:<10} iters={tr.iterations:<6} residual={last} {tr.reason}")
        failed |= tr.status is Status.FAILED
    print(f"outputs in {os.path.normpath(args.out or spec.resolve(spec.out))}")
    return EXIT_FAILURE if failed else EXIT_OK


def _cmd_audit(args) -> int:
    if args.samples < 1:
        raise _UsageError("--samples must be positive")
    report = audit_problem(_load(args.spec), args.samples)
    print(report.to_text())
    return EXIT_OK if report.ok else EXIT_FAILURE


def _cmd_rate(args) -> int:
    try:
        trace = read_trace_csv(args.trace)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    print(estimate_rate(trace))
    return EXIT_OK


def _cmd_expand(args) -> int:
    try:
        raw = read_libsvm(args.source)
    except ParseError as exc:
        raise _UsageError(f"{args.source}: {exc}") from None
    ds = poly_expand(raw, standardize=not args.no_standardize)
    save_dataset(Path(args.out), ds)
    print(f"{raw.n} features -> n={ds.n}, J={len(ds.structure.groups)}; wrote {args.out}")
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "audit": _cmd_audit, "rate": _cmd_rate, "expand": _cmd_expand}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"proxnewton: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"proxnewton: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
