"""Command-line entry point: ``permtsp {generate,solve,sweep,shift-curve,distribution}``.

Exit status is 0 on success, 2 on usage errors and 1 on runtime errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .instances import InvalidSizeError, generate_uniform, write_instances
from .solver import SolverConfig

log = logging.getLogger("permtsp")


def _method(text: str) -> bench.Method:
    try:
        return bench.Method.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _config(args) -> SolverConfig:
    cfg = SolverConfig.from_file(args.config) if args.config else SolverConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def cmd_generate(args) -> int:
    instances = generate_uniform(args.n, args.seed if args.seed is not None else 0, args.count)
    write_instances(args.out, instances)
    print(f"wrote {len(instances)} instances of n={args.n} to {args.out}")
    return 0


def cmd_solve(args) -> int:
    method = args.method
    instances = bench.load_instances(args.instances)
    cfg = _config(args)
    records = bench.run_batch(instances, method, cfg, args.workers, with_gap=not args.no_gap)
    report = bench.build_report(method, records, cfg, args.instances, cfg.seed)
    bench.write_report(report, args.out)
    print(bench.table_row(report))
    return 0


def cmd_sweep(args) -> int:
    instances = bench.load_instances(args.instances)
    grid = bench.parse_grid(Path(args.grid).read_text())
    result = bench.sweep(instances, grid, _config(args), args.method, args.workers)
    out = Path(args.out)
    out.write_text(json.dumps(result, indent=1, sort_keys=True) + "\n")
    bench.write_rows_csv(result["grid"], out.with_suffix(".csv"))
    best_cfg = SolverConfig(**result["best_config"])
    out.with_suffix(".best.cfg").write_text(best_cfg.dumps())
    for row in result["grid"]:
        print("  ".join(f"{k}={v:.6g}" for k, v in row.items()))
    print("best:", "  ".join(f"{k}={v:.6g}" for k, v in result["best"].items()))
    return 0


def cmd_shift_curve(args) -> int:
    instances = bench.load_instances(args.instances)
    rows = bench.shift_curve(instances, _config(args), args.workers)
    bench.write_rows_csv(rows, args.out)
    for row in rows:
        print(f"m={row['m']:<3d} k={row['k']:<3d} mean={row['mean_length']:.4f}")
    return 0


def cmd_distribution(args) -> int:
    reports = [bench.read_report(p) for p in args.reports]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, rows in bench.distributions(reports, args.bins).items():
        bench.write_rows_csv(rows, out / f"{name}.csv")
    print(f"wrote hist.csv, box.csv, cdf.csv to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="permtsp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", required=True)
        if config:
            p.add_argument("--config", default=None, help="key = value solver config file")

    p = sub.add_parser("generate", help="write uniform random instances")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--count", type=int, default=1)
    common(p, config=False)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="run a method over an instance file")
    p.add_argument("instances")
    p.add_argument("--method", required=True, type=_method,
                   help="solver:kK | ensemble | ensemble:mM | nn | nn_all | farthest | beam:wW | christofides | exact")
    p.add_argument("--no-gap", action="store_true", help="skip the reference solutions")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="grid search over solver settings")
    p.add_argument("instances")
    p.add_argument("--grid", required=True)
    p.add_argument("--method", default="solver:k1", type=_method)
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("shift-curve", help="mean length against the number of coprime shifts")
    p.add_argument("instances")
    common(p)
    p.set_defaults(func=cmd_shift_curve)

    p = sub.add_parser("distribution", help="histograms, box summaries and CDFs of reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_distribution)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (InvalidSizeError, bench.BenchError, ValueError, OSError) as exc:
        print(f"permtsp {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
