"""Command-line front end: single evaluations, grid sweeps, file ingestion.

Exit codes: 0 when every requested solve reached Optimal (or --lenient was
given), 1 when any solve ended in NumericalTrouble or Infeasible, 2 for
invalid arguments, configuration, or input files.
"""

from __future__ import annotations

import argparse
import sys

from .bench import (
    DEFAULT_N,
    RangeError,
    PointSpec,
    SweepSpec,
    default_sweep,
    parse_config,
    run_ingested,
    run_point,
    run_sweep,
    write_sweep_csv,
    _result_row,
)
from .ensemble import InvariantViolation, NegativeEnergy, ParseError
from .sdp import SolveStatus


def _add_point_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--scenario", required=True,
                     help="TwoCoherent, ThreeCoherentRing, or SqueezedPair")
    sub.add_argument("--N", type=int, default=None,
                     help="Fock cutoff (default: 20, ring scenario 15)")
    sub.add_argument("--T", type=float, default=1.0, help="transmittance in (0, 1]")
    sub.add_argument("--Vex", type=float, default=0.0,
                     help="excess quadrature noise, added to the vacuum 1/2")
    sub.add_argument("--overlap", type=float, default=None,
                     help="two-state overlap <a|-a> in (0, 1)")
    sub.add_argument("--alpha", type=float, default=None,
                     help="coherent amplitude (ring radius or pair amplitude)")
    sub.add_argument("--r", type=float, default=None,
                     help="squeezing magnitude for SqueezedPair")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbench",
        description="Certified negativity bounds for optical benchmarks.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    point = subs.add_parser("point", help="evaluate one parameter point")
    _add_point_flags(point)
    point.add_argument("--out", default=None,
                       help="basename for a one-row CSV next to the printout")
    point.add_argument("--lenient", action="store_true",
                       help="exit 0 even when a solve is not Optimal")

    sweep = subs.add_parser("sweep", help="evaluate a grid, write CSV and SVG")
    sweep.add_argument("--config", default=None,
                       help="key-value sweep file; overrides the flag grid")
    sweep.add_argument("--scenario", default=None,
                       help="scenario for the built-in default grid")
    sweep.add_argument("--jobs", type=int, default=1,
                       help="parallel grid workers (default 1)")
    sweep.add_argument("--out", default=None, help="output basename")
    sweep.add_argument("--lenient", action="store_true",
                       help="exit 0 even when some grid points fail")

    ingest = subs.add_parser("ingest", help="solve from a measurement record file")
    ingest.add_argument("records", help="path to a qbench-records file")
    ingest.add_argument("--N", type=int, required=True, help="Fock cutoff")
    ingest.add_argument("--T", type=float, default=1.0,
                        help="transmittance recorded with the data")
    ingest.add_argument("--out", default=None,
                        help="basename for a one-row CSV next to the printout")
    ingest.add_argument("--lenient", action="store_true",
                        help="exit 0 even when a solve is not Optimal")
    return parser


def _point_spec(args: argparse.Namespace) -> PointSpec:
    N = args.N if args.N is not None else DEFAULT_N.get(args.scenario, 20)
    return PointSpec(
        scenario=args.scenario,
        N=N,
        T=args.T,
        V_ex=args.Vex,
        overlap=args.overlap,
        alpha=args.alpha,
        r=args.r,
    )


def _print_result(result) -> None:
    spec = result.spec
    fields = [f"scenario={spec.scenario}", f"N={spec.N}", f"T={spec.T}"]
    for name in ("overlap", "alpha", "r", "var_x", "var_p"):
        value = getattr(spec, name)
        if value is not None:
            fields.append(f"{name}={value}")
    fields.append(f"V_ex={spec.V_ex}")
    print(" ".join(fields))
    print(f"lower_bound = {result.lower.lower_bound!r}  [{result.lower.status.value}]")
    print(f"hybrid_upper = {result.upper.lower_bound!r}  [{result.upper.status.value}]")
    print(f"quantum_domain = {'true' if result.quantum_domain else 'false'}")


def _finish_point(result, out, lenient: bool) -> int:
    _print_result(result)
    if out is not None:
        write_sweep_csv(f"{out}.csv", [_result_row(result)])
        print(f"wrote {out}.csv")
    return 0 if (lenient or result.all_optimal) else 1


def _cmd_point(args: argparse.Namespace) -> int:
    result = run_point(_point_spec(args))
    return _finish_point(result, args.out, args.lenient)


def _cmd_ingest(args: argparse.Namespace) -> int:
    result = run_ingested(args.records, N=args.N, T=args.T)
    return _finish_point(result, args.out, args.lenient)


def _cmd_sweep(args: argparse.Namespace) -> int:
    if args.config is not None:
        spec = parse_config(args.config)
    elif args.scenario is not None:
        spec = default_sweep(args.scenario)
    else:
        raise RangeError("sweep needs --config or --scenario")
    if args.out is not None:
        spec = SweepSpec(
            scenario=spec.scenario, axis1=spec.axis1, axis2=spec.axis2,
            N=spec.N, T=spec.T, r=spec.r, out=args.out,
        )
    rows = run_sweep(spec, jobs=args.jobs)
    optimal = sum(
        1 for row in rows
        if row["lower_status"] == SolveStatus.OPTIMAL.value
        and row["upper_status"] == SolveStatus.OPTIMAL.value
    )
    print(f"{optimal}/{len(rows)} grid points Optimal")
    print(f"wrote {spec.out}.csv and {spec.out}.svg")
    return 0 if (args.lenient or optimal == len(rows)) else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"point": _cmd_point, "sweep": _cmd_sweep, "ingest": _cmd_ingest}
    try:
        return handler[args.command](args)
    except (RangeError, ParseError, InvariantViolation, NegativeEnergy) as exc:
        print(f"qbench: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"qbench: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
