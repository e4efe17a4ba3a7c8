"""plot subcommand: render one quantity from line-cut records."""

import argparse
import sys

from .figures import FigureSpec, RecordError, plot_linecuts, time_from_filename


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render simulator line-cut records as figures")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("plot", help="one figure, one curve per record file")
    p.add_argument("--quantity", required=True, choices=("p_l", "S_g", "c_h2"))
    p.add_argument("--records", nargs="+", required=True,
                   help="line-cut CSV files (times inferred from names)")
    p.add_argument("--times", nargs="+", type=float, default=None,
                   help="legend times in years, overriding the file names")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--title", default="")
    p.add_argument("--force", action="store_true",
                   help="overwrite an existing output file")

    args = parser.parse_args(argv)
    try:
        times = (args.times if args.times is not None
                 else [time_from_filename(r) for r in args.records])
        spec = FigureSpec(quantity=args.quantity, records=args.records,
                          times_years=times, out_path=args.out,
                          overwrite=args.force, title=args.title)
        plot_linecuts(spec)
    except RecordError as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out} ({len(args.records)} curves)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
