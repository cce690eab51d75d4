"""Command-line wrapper around the figure renderers."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureSpec, plot
from .io import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfac-figures", description="Render figures from mfac run outputs"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ch = sub.add_parser("control-hist", help="learned control + histogram vs analytic overlays")
    ch.add_argument("--hist", required=True, help="histogram JSON from export-hist")
    ch.add_argument("--out", required=True)
    ch.add_argument("--x-range", type=float, nargs=2, default=None, metavar=("LO", "HI"))

    me = sub.add_parser("mean-error", help="mean-error convergence curve (with seed band)")
    me.add_argument("--metrics", required=True, help="metrics.csv or aggregate.csv")
    me.add_argument("--out", required=True)
    me.add_argument("--x-range", type=float, nargs=2, default=None, metavar=("LO", "HI"))

    vf = sub.add_parser("value-fn", help="negated learned value vs analytic quadratic")
    vf.add_argument("--summary", required=True, help="summary.json from a run")
    vf.add_argument("--out", required=True)
    vf.add_argument("--x-range", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    inputs = {}
    if args.command == "control-hist":
        kind, inputs = "control_hist", {"hist": args.hist}
    elif args.command == "mean-error":
        kind, inputs = "mean_error", {"metrics": args.metrics}
    else:
        kind, inputs = "value_fn", {"summary": args.summary}
    spec = FigureSpec(
        kind=kind,
        inputs=inputs,
        out=args.out,
        x_range=tuple(args.x_range) if args.x_range else None,
    )
    try:
        plot(spec)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    print(spec.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
