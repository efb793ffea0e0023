"""Figure-rendering command line: `render` one figure or `render-all` a
directory of recognized CSVs."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, SchemaError, render, render_all


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fcaplots",
                                description="figures from fcalab CSV outputs")
    sub = p.add_subparsers(dest="subcommand", metavar="subcommand")

    sp = sub.add_parser("render", help="render one figure")
    sp.add_argument("--kind", choices=KINDS, required=True)
    sp.add_argument("--input", action="append", required=True,
                    help="input CSV (repeatable)")
    sp.add_argument("--out", required=True,
                    help="output image base path (.png and .svg are written)")
    sp.add_argument("--constants", default=None,
                    help="constants.json path (default: next to the input)")

    sp = sub.add_parser("render-all", help="render every recognized CSV")
    sp.add_argument("--dir", required=True, help="directory of CSV outputs")
    sp.add_argument("--out-dir", default=None,
                    help="image directory (default: same as --dir)")
    return p


def run(argv) -> int:
    args = _build_parser().parse_args(argv)
    if args.subcommand is None:
        _build_parser().print_usage()
        return 2
    try:
        if args.subcommand == "render":
            info = render(FigureSpec(tuple(args.input), args.kind, args.out,
                                     args.constants))
            print(", ".join(info["files"]))
        else:
            render_all(args.dir, args.out_dir)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
