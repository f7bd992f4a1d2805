"""Command-line entry point for the experiment harness."""
from __future__ import annotations

import argparse
import sys

from . import harness


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dualshadows",
        description="Shadow-protocol experiments for the Z2 lattice gauge theory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("run", "coupling sweep with estimates vs exact values"),
        ("scale-nu", "average relative error vs shot count"),
        ("scale-v", "average relative error vs volume"),
        ("fbc", "fixed-boundary demo, single experiment per coupling"),
        ("costs", "depth / variance-bound cost table"),
        ("exact", "exact diagonalization baseline only"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="INI config path")
        p.add_argument("--seed", type=int, default=7, help="master seed")
        p.add_argument("--out", default=None, help="output CSV (or text for costs)")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
    args = parser.parse_args(argv)

    cfg = harness.load_config(args.config)
    if args.command == "costs":
        table = harness.report_costs(cfg, args.seed)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(table + "\n")
        else:
            print(table)
        return 0

    runners = {
        "run": (harness.run_experiment, harness.ESTIMATE_HEADER),
        "scale-nu": (harness.run_scaling_nu, harness.SCALING_HEADER),
        "scale-v": (harness.run_scaling_volume, harness.VOLUME_HEADER),
        "fbc": (harness.run_fbc_demo, harness.ESTIMATE_HEADER),
        "exact": (harness.run_exact, harness.ESTIMATE_HEADER),
    }
    runner, header = runners[args.command]
    rows = runner(cfg, args.seed, args.threads)
    if args.out:
        harness.write_csv(args.out, header, rows)
    else:
        import csv

        w = csv.writer(sys.stdout)
        w.writerow(header)
        w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
