"""``randsum`` command line.

Exit status: 0 on success, 1 on a domain error (a JSON object
``{"error": ..., "message": ...}`` goes to stderr), 2 on a usage error.

Pmf JSON files carry no mass deficit, so by default a law read from disk is
treated as a truncated view of a possibly unbounded law when estimating decay
rates; ``--bounded`` takes a zero deficit literally (bounded support, infinite
rate).
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from . import io
from .dist import convolve, point_mass, self_convolve
from .errors import RandsumError
from .limit import build_operator, fixed_point
from .process import ProcessSpec, compound_pmf, evolve, propagate_moments, simulate
from .tail import c_param_estimate, convolution_invariance_report, report_estimate

DEFAULT_WINDOW = 0.25
DEFAULT_CHAIN_CAP = 500


def _emit(text: str, output: str | None) -> None:
    if output:
        io.atomic_write(output, text)
    else:
        sys.stdout.write(text)


def _window(value: str) -> float:
    w = float(value)
    if not 0.0 < w < 1.0:
        raise argparse.ArgumentTypeError("window must lie in (0, 1)")
    return w


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _non_negative_int(value: str) -> int:
    n = int(value)
    if n < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return n


def cmd_convolve(args) -> None:
    a = io.load_pmf(args.a)
    if args.b:
        result = convolve(a, io.load_pmf(args.b), args.cap)
    else:
        result = self_convolve(a, args.k, args.cap)
    _emit(io.pmf_dumps(result), args.output)


def cmd_compound(args) -> None:
    result = compound_pmf(io.load_pmf(args.count), io.load_pmf(args.xi), args.cap)
    _emit(io.pmf_dumps(result), args.output)


def cmd_evolve(args) -> None:
    spec = ProcessSpec(args.x0, io.load_pmf(args.xi), args.cap)
    laws = evolve(spec, args.steps)
    moms = propagate_moments(spec, args.steps) if args.moments else None
    _emit(io.dumps([io.pmf_to_dict(p) for p in laws], indent=1) + "\n", args.output)
    if moms is not None:
        io.atomic_write(args.moments, io.moments_csv(moms))


def cmd_simulate(args) -> None:
    spec = ProcessSpec(args.x0, io.load_pmf(args.xi), max(args.x0, args.cap or args.x0))
    trace = simulate(spec, args.steps, args.paths, args.seed, workers=args.workers)
    _emit(io.trace_csv(trace.paths), args.output)


def cmd_cparam(args) -> None:
    est = c_param_estimate(io.load_pmf(args.pmf), args.window, truncated=not args.bounded)
    _emit(io.dumps(io.estimate_to_dict(est), indent=1) + "\n", args.output)


def cmd_invariance(args) -> None:
    report = convolution_invariance_report(
        io.load_pmf(args.pmf), args.k_max, args.cap, args.window, truncated=not args.bounded
    )
    _emit(io.dumps(io.invariance_report_to_dict(report), indent=1) + "\n", args.output)


def cmd_fixedpoint(args) -> None:
    M = build_operator(io.load_pmf(args.xi), args.cap)
    result = fixed_point(M, point_mass(args.x0), args.tol, args.max_iter)
    diagnostics = io.dumps(io.fixed_point_diagnostics(result), indent=1) + "\n"
    if args.operator_csv:
        io.atomic_write(args.operator_csv, io.operator_csv(M))
    if args.diagnostics:
        io.atomic_write(args.diagnostics, diagnostics)
    if args.output:
        io.save_pmf(args.output, result.f_star)
    else:
        sys.stdout.write(io.pmf_dumps(result.f_star))
        sys.stdout.write(diagnostics)


def cmd_delay_chain(args) -> None:
    """Inter-delay time of two packets after each router hop."""
    lateral = io.load_pmf(args.lateral)
    spec = ProcessSpec(args.tau0, lateral, max(args.cap, args.tau0))
    laws = evolve(spec, args.hops)
    moms = propagate_moments(spec, args.hops)
    hops = []
    for hop, (law, mom) in enumerate(zip(laws, moms)):
        est = report_estimate(law, args.window, truncated=not args.bounded)
        hops.append(
            {
                "hop": hop,
                "law": io.pmf_to_dict(law),
                "mass_deficit": float(law.mass_deficit),
                "mean": mom.mean,
                "variance": mom.variance,
                "c_param": io.estimate_to_dict(est),
            }
        )
    _emit(io.dumps({"tau0": args.tau0, "cap": spec.cap, "hops": hops}, indent=1) + "\n", args.output)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randsum",
        description="Random-sum processes: compound laws, tail decay rates, limit laws.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        p.add_argument("-o", "--output", help="output file (default: stdout)")
        p.set_defaults(func=func)
        return p

    p = add("convolve", cmd_convolve, "convolve two pmfs, or self-convolve one k times")
    p.add_argument("--a", required=True)
    p.add_argument("--b")
    p.add_argument("--k", type=_positive_int, default=2, help="folds when --b is absent")
    p.add_argument("--cap", type=_non_negative_int, required=True)

    p = add("compound", cmd_compound, "law of a random sum of xi with count law")
    p.add_argument("--count", required=True)
    p.add_argument("--xi", required=True)
    p.add_argument("--cap", type=_non_negative_int, required=True)

    p = add("evolve", cmd_evolve, "exact laws of X_0 .. X_n")
    p.add_argument("--xi", required=True)
    p.add_argument("--x0", type=_positive_int, required=True)
    p.add_argument("--steps", type=_non_negative_int, required=True)
    p.add_argument("--cap", type=_positive_int, required=True)
    p.add_argument("--moments", help="also write step,mean,variance CSV here")

    p = add("simulate", cmd_simulate, "seeded Monte Carlo trajectories (CSV)")
    p.add_argument("--xi", required=True)
    p.add_argument("--x0", type=_positive_int, required=True)
    p.add_argument("--steps", type=_positive_int, required=True)
    p.add_argument("--paths", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--cap", type=_positive_int)
    p.add_argument("--workers", type=_positive_int, default=1)

    p = add("cparam", cmd_cparam, "estimate the tail decay rate of a pmf")
    p.add_argument("--pmf", required=True)
    p.add_argument("--window", type=_window, default=DEFAULT_WINDOW)
    p.add_argument("--bounded", action="store_true")

    p = add("invariance", cmd_invariance, "decay rate of k-fold convolutions, k = 1..k-max")
    p.add_argument("--pmf", required=True)
    p.add_argument("--k-max", type=_positive_int, required=True)
    p.add_argument("--cap", type=_positive_int, required=True)
    p.add_argument("--window", type=_window, default=DEFAULT_WINDOW)
    p.add_argument("--bounded", action="store_true")

    p = add("fixedpoint", cmd_fixedpoint, "fixed point of the truncated operator")
    p.add_argument("--xi", required=True)
    p.add_argument("--x0", type=_non_negative_int, required=True, help="start from this point mass")
    p.add_argument("--cap", type=_positive_int, required=True, help="truncation order K")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=_positive_int, default=10_000)
    p.add_argument("--diagnostics", help="write diagnostics JSON here")
    p.add_argument("--operator-csv", help="write the operator as y,k,value CSV here")

    p = add("delay-chain", cmd_delay_chain, "inter-delay time through a chain of routers")
    p.add_argument("--hops", type=_non_negative_int, required=True)
    p.add_argument("--lateral", required=True)
    p.add_argument("--tau0", type=_positive_int, required=True)
    p.add_argument("--cap", type=_positive_int, default=DEFAULT_CHAIN_CAP)
    p.add_argument("--window", type=_window, default=DEFAULT_WINDOW)
    p.add_argument("--bounded", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except RandsumError as exc:
        error = {"error": exc.code, "message": str(exc)}
    except ValueError as exc:
        error = {"error": "ValueError", "message": str(exc)}
    else:
        return 0
    sys.stderr.write(json.dumps(error) + "\n")
    return 1


if __name__ == "__main__":
    sys.exit(main())
