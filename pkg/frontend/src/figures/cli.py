"""Command-line entry point: figures render --panel KIND --csv IN --out OUT."""
from __future__ import annotations

import argparse
import sys

from .panels import PANEL_KINDS, PanelSpec, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="figures")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one panel from a harness CSV")
    p.add_argument("--panel", required=True, choices=PANEL_KINDS)
    p.add_argument("--csv", required=True, help="input CSV path")
    p.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    try:
        out = render(PanelSpec(args.csv, args.panel, args.out))
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
