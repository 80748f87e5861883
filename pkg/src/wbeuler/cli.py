"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 comparator crashed in the stiff regime (expected behaviour, flagged).
"""

from __future__ import annotations

import argparse
import os
import sys

from .bench import (
    ConfigError,
    apply_overrides,
    compare_dirs,
    parse_config,
    run_case,
    sweep,
    table1,
    table2,
)
from .solver import SolverFailure

_STATUS_CODE = {"completed": 0, "crashed-as-expected": 4, "failed": 3}


def _parser():
    p = argparse.ArgumentParser(
        prog="wbeuler",
        description="Benchmarks for the well-balanced semi-implicit scheme",
    )
    sub = p.add_subparsers(dest="verb", required=True)

    run_p = sub.add_parser("run", help="execute one configured case")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE")

    sweep_p = sub.add_parser("sweep", help="run a config across eps or mesh values")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--axis", required=True, choices=["eps", "mesh"])
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated list, e.g. 1e-1,1e-2,1e-3")
    sweep_p.add_argument("--override", action="append", default=[],
                         metavar="KEY=VALUE")

    cmp_p = sub.add_parser("compare", help="field-wise L1 table for two run dirs")
    cmp_p.add_argument("--a", required=True)
    cmp_p.add_argument("--b", required=True)

    t1_p = sub.add_parser("table1", help="hydrostatic preservation errors")
    t1_p.add_argument("--outdir", default="bench_out/table1")

    t2_p = sub.add_parser("table2", help="vortex mesh-refinement EOC table")
    t2_p.add_argument("--outdir", default="bench_out/table2")
    t2_p.add_argument("--eps", default="1e-1,1e-2,1e-3")
    t2_p.add_argument("--meshes", default="25,50,100,200")
    return p


def _print_report(rep):
    print(f"{rep.case} [{rep.scheme}] -> {rep.status}  ({rep.outdir})")
    for key, val in rep.errors.items():
        print(f"  {key} = {val:.6e}")
    for key in ("steps", "newton_median", "newton_max", "wall_time"):
        if key in rep.meta:
            val = rep.meta[key]
            print(f"  {key} = {val:.3f}" if isinstance(val, float) else f"  {key} = {val}")


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.verb == "run":
            cfg = apply_overrides(parse_config(args.config), args.override)
            rep = run_case(cfg)
            _print_report(rep)
            return _STATUS_CODE[rep.status]

        if args.verb == "sweep":
            cfg = apply_overrides(parse_config(args.config), args.override)
            values = [v for v in args.values.split(",") if v]
            reports, rows, path = sweep(cfg, args.axis, values)
            for rep in reports:
                _print_report(rep)
            print(f"summary: {path}")
            statuses = {r.status for r in reports}
            if "failed" in statuses:
                return 3
            if "crashed-as-expected" in statuses:
                return 4
            return 0

        if args.verb == "compare":
            for d in (args.a, args.b):
                if not os.path.isdir(d):
                    print(f"not a run directory: {d}", file=sys.stderr)
                    return 2
            rows = compare_dirs(args.a, args.b)
            print("field,snapshot,l1_diff")
            for row in rows:
                print(f"{row['field']},{row['snapshot']},{row['l1_diff']:.17g}")
            return 0

        if args.verb == "table1":
            rows, path = table1(args.outdir)
            print("potential,eps,l1_rho,l1_mom,status")
            for r in rows:
                print(f"{r['potential']},{r['eps']:g},{r['l1_rho']:.6e},"
                      f"{r['l1_mom']:.6e},{r['status']}")
            print(f"written: {path}")
            return 0

        if args.verb == "table2":
            eps_values = tuple(float(v) for v in args.eps.split(",") if v)
            meshes = tuple(int(v) for v in args.meshes.split(",") if v)
            rows, path = table2(args.outdir, eps_values=eps_values, meshes=meshes)
            print("eps,n,l1_rho,eoc_rho,l1_mom_x,eoc_mom_x,l1_mom_y,eoc_mom_y")
            for r in rows:
                print(f"{r['eps']:g},{r['n']},{r['l1_rho']:.6e},{r['eoc_rho']:.4f},"
                      f"{r['l1_mom_x']:.6e},{r['eoc_mom_x']:.4f},"
                      f"{r['l1_mom_y']:.6e},{r['eoc_mom_y']:.4f}")
            print(f"written: {path}")
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
