"""Render all recognized figures from a run directory."""

from __future__ import annotations

import argparse
import sys

from .render import RenderError, discover_figures, render


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="plotview")
    ap.add_argument("--run", required=True, help="run directory with exported reports")
    ap.add_argument("--out", default=None, help="figure output directory (default: run dir)")
    ap.add_argument("--format", default="svg", choices=("svg", "pdf", "png"))
    args = ap.parse_args(argv)
    specs = discover_figures(args.run, args.out, args.format)
    if not specs:
        print(f"plotview: no recognized reports in {args.run}", file=sys.stderr)
        return 2
    code = 0
    for spec in specs:
        try:
            path = render(spec)
            print(f"plotview: wrote {path}")
        except RenderError as exc:
            print(f"plotview: {spec.kind}: {exc}", file=sys.stderr)
            code = 1
    return code


if __name__ == "__main__":
    sys.exit(main())
