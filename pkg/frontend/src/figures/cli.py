"""Command line: figures <kind> <in.csv> [more.csv ...] <out.png>."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, FigureError, FigureJob, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render a report or path CSV into a static figure.")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("paths", nargs="+", metavar="in.csv ... out.png",
                        help="one or more input CSVs followed by the output image")
    parser.add_argument("--xlabel", default="")
    parser.add_argument("--ylabel", default="")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if len(args.paths) < 2:
        print("error: need at least one input CSV and an output image",
              file=sys.stderr)
        return 2
    try:
        job = FigureJob(kind=args.kind,
                        inputs=tuple(Path(p) for p in args.paths[:-1]),
                        output=Path(args.paths[-1]),
                        xlabel=args.xlabel, ylabel=args.ylabel)
        out = render(job)
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
