"""Command line entry point: python -m efronci_reports --csv ... --figure ..."""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURES, ReportsError, render_figure


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="efronci_reports",
        description="Render an SVG figure from an experiment CSV.",
    )
    parser.add_argument("--csv", required=True, help="input CSV table")
    parser.add_argument("--figure", required=True, choices=sorted(FIGURES))
    parser.add_argument("--out", required=True, help="output SVG path")
    parser.add_argument(
        "--filter",
        nargs="*",
        default=(),
        metavar="KEY=VALUE",
        help="row filters, e.g. --filter mode=known eps=0",
    )
    parser.add_argument(
        "--delta",
        type=float,
        default=0.1,
        help="coverage target line sits at 1 - delta (coverage_plot only)",
    )
    args = parser.parse_args(argv)
    filters = {}
    for item in args.filter:
        key, sep, value = item.partition("=")
        if not sep or not key:
            parser.error(f"bad filter {item!r}, expected KEY=VALUE")
        filters[key] = value
    try:
        render_figure(args.csv, args.figure, args.out, filters, delta=args.delta)
    except (ReportsError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
