"""Command-line surface.

Every subcommand writes one artifact (JSON or CSV) to stdout or to
``--out`` and touches nothing else.  Outputs are deterministic given the
flags, including ``--seed``, and do not depend on ``--workers``.

Exit codes: 0 success, 1 usage or parameter error, 2 numeric/infeasible
condition (no replicate satisfied a conditioning event, or a degenerate
contingency table).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import serialize
from .analytic import CounterexampleParams, analytic_report, r_curve
from .conditional import (
    counterexample_report,
    exact_conditional,
    brute_force_conditional,
    limit_diagnostics,
    mc_conditional,
)
from .coupling import independence_test, mismatch_rates
from .errors import DegenerateTableError, ParameterError, ZeroSupportError
from .genealogy import brute_force_transition, mohle_transition, parse_partition
from .serialize import fmt, render_json
from .simulate import simulate

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _add_params(p: argparse.ArgumentParser):
    p.add_argument("--alpha", type=float, required=True, help="initial weight of state a")
    p.add_argument("--pa", type=float, required=True, help="potential of state a")
    p.add_argument("--pb", type=float, required=True, help="potential of state b")


def _add_mc(p: argparse.ArgumentParser):
    p.add_argument("--reps", type=int, required=True, help="Monte Carlo replicates")
    p.add_argument("--seed", type=int, required=True, help="64-bit seed")
    p.add_argument("--workers", type=int, default=1, help="worker threads (result-neutral)")


def _int_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip() != ""]
    except ValueError as exc:
        raise ParameterError(f"malformed integer list: {text!r}") from exc


def build_parser() -> _Parser:
    parser = _Parser(prog="particle-ancestry")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("r-eval", help="evaluate the analytic attachment bound R")
    _add_params(p)
    p.add_argument("--out")

    p = sub.add_parser("r-curve", help="R on a grid of p_b values, as CSV")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--pa", type=float, required=True)
    p.add_argument("--pb-min", type=float, default=0.0)
    p.add_argument("--pb-max", type=float, required=True)
    p.add_argument("--points", type=int, default=500)
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="run a particle system from a model JSON file")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")

    p = sub.add_parser("mohle", help="one-step coalescence probability given offspring counts")
    p.add_argument("--xi", required=True, help="source partition, e.g. 1|2")
    p.add_argument("--eta", required=True, help="target partition, e.g. 1,2")
    p.add_argument("--nu", required=True, help="offspring counts, e.g. 2,1,0")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--brute-force", action="store_true", help="use the enumeration oracle")

    p = sub.add_parser("exact-cond", help="exact conditional attachment probability")
    _add_params(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--oracle", action="store_true", help="use the full-enumeration oracle")

    p = sub.add_parser("mc-cond", help="conditioned Monte Carlo attachment estimate")
    _add_params(p)
    p.add_argument("--N", type=int, required=True)
    _add_mc(p)
    p.add_argument("--out")

    p = sub.add_parser("diagnostics", help="empirical generation statistics vs analytic limits")
    _add_params(p)
    p.add_argument("--N", type=int, required=True)
    _add_mc(p)
    p.add_argument("--out")

    p = sub.add_parser("coupling", help="surrogate mismatch decay along a ladder of N")
    _add_params(p)
    p.add_argument("--N-list", required=True, help="population sizes, e.g. 25,50,100,200")
    _add_mc(p)
    p.add_argument("--out")

    p = sub.add_parser("independence", help="chi-square check of the surrogate independence")
    _add_params(p)
    p.add_argument("--N", type=int, required=True)
    _add_mc(p)
    p.add_argument("--out")

    p = sub.add_parser("report", help="exact / predicted / MC attachment table as CSV")
    _add_params(p)
    p.add_argument("--N-list", required=True)
    _add_mc(p)
    p.add_argument("--out")

    return parser


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run(args) -> int:
    cmd = args.command
    if cmd == "r-eval":
        params = CounterexampleParams(args.alpha, args.pa, args.pb)
        payload = serialize.analytic_to_dict(params, analytic_report(params))
        _emit(render_json(payload), args.out)
    elif cmd == "r-curve":
        rows = r_curve(args.alpha, args.pa, args.pb_min, args.pb_max, args.points)
        _emit(serialize.render_r_curve_csv(rows), args.out)
    elif cmd == "simulate":
        try:
            with open(args.model) as fh:
                model = serialize.model_from_dict(json.load(fh))
        except OSError as exc:
            raise ParameterError(f"cannot read model file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParameterError(f"model file is not valid JSON: {exc}") from exc
        traj = simulate(model, args.N, args.T, args.seed)
        _emit(render_json(serialize.trajectory_to_dict(traj)), args.out)
    elif cmd == "mohle":
        xi = parse_partition(args.xi)
        eta = parse_partition(args.eta)
        nu = _int_list(args.nu)
        op = brute_force_transition if args.brute_force else mohle_transition
        _emit(fmt(op(xi, eta, nu, args.N)) + "\n", None)
    elif cmd == "exact-cond":
        params = CounterexampleParams(args.alpha, args.pa, args.pb)
        op = brute_force_conditional if args.oracle else exact_conditional
        _emit(fmt(op(params, args.N)) + "\n", None)
    elif cmd == "mc-cond":
        params = CounterexampleParams(args.alpha, args.pa, args.pb)
        est = mc_conditional(params, args.N, args.reps, args.seed, workers=args.workers)
        _emit(render_json(serialize.estimate_to_dict(args.N, est)), args.out)
    elif cmd == "diagnostics":
        params = CounterexampleParams(args.alpha, args.pa, args.pb)
        rep = limit_diagnostics(params, args.N, args.reps, args.seed, workers=args.workers)
        _emit(render_json(serialize.diagnostics_to_dict(rep)), args.out)
    elif cmd == "coupling":
        params = CounterexampleParams(args.alpha, args.pa, args.pb)
        rep = mismatch_rates(
            params, _int_list(args.N_list), args.reps, args.seed, workers=args.workers
        )
        _emit(serialize.render_coupling_csv(rep), args.out)
    elif cmd == "independence":
        params = CounterexampleParams(args.alpha, args.pa, args.pb)
        res = independence_test(params, args.N, args.reps, args.seed, workers=args.workers)
        _emit(
            render_json(
                serialize.independence_to_dict(res, args.N, args.reps, args.seed)
            ),
            args.out,
        )
    elif cmd == "report":
        params = CounterexampleParams(args.alpha, args.pa, args.pb)
        rows = counterexample_report(
            params, _int_list(args.N_list), args.reps, args.seed, workers=args.workers
        )
        _emit(serialize.render_report_csv(rows), args.out)
    else:  # pragma: no cover - argparse enforces the choices
        raise ParameterError(f"unknown command {cmd!r}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _run(args)
    except (ZeroSupportError, DegenerateTableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
