"""Command line for the figure renderer.

Examples:
    render --kind probability-curves --in probabilities.csv --out curves.png
    render --kind sampler-comparison --in hrla.csv --in ola.csv --in ula.csv \
           --label hrla --label ola --label ula --epsilon 2.0 --out compare.png
    render --kind kl-profile --in kl_profile.csv --out kl.png
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render", description="Render figures from optimizer CSV artifacts.")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="CSV", type=Path,
                        help="input CSV (repeat to overlay several)")
    parser.add_argument("--out", required=True, type=Path, metavar="IMAGE")
    parser.add_argument("--epsilon", dest="epsilons", action="append",
                        type=float, metavar="EPS",
                        help="threshold to draw (repeatable; default: all)")
    parser.add_argument("--label", dest="labels", action="append", metavar="NAME",
                        help="legend label per input, in order")
    parser.add_argument("--title")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    for path in args.inputs:
        if not path.exists():
            print(f"error: input not found: {path}", file=sys.stderr)
            return 2
    spec = FigureSpec(
        kind=args.kind,
        inputs=tuple(args.inputs),
        output=args.out,
        epsilons=tuple(args.epsilons) if args.epsilons else None,
        labels=tuple(args.labels) if args.labels else None,
        title=args.title,
    )
    try:
        out = render(spec)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
