"""Command line: plot --layout fig1 --neq a.csv --mnl b.csv --out fig1.png"""

from __future__ import annotations

import argparse
import sys

from .render import LAYOUTS, PanelSpec, SchemaError, render


def run_cli(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot",
        description="Render choicedyn trajectory CSVs into the standard panel layouts.",
    )
    parser.add_argument("--layout", required=True, choices=LAYOUTS)
    parser.add_argument("--neq", required=True, help="CSV from the non-equilibrium engine")
    parser.add_argument("--mnl", required=True, help="CSV from the mnl-equilibrium engine")
    parser.add_argument("--out", required=True, help="output image path")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if (exc.code or 0) else 0
    try:
        result = render(PanelSpec(args.layout, args.neq, args.mnl, args.out))
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {result.image_path} ({len(result.series)} series)")
    return 0


def console_entry() -> None:
    sys.exit(run_cli())
