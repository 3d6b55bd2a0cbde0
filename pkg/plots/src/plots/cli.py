"""Command-line surface: `plots pareto` and `plots opinions`.

Exit codes: 0 success, 1 input/usage error.
"""

from __future__ import annotations

import argparse
import sys

from .opinions import opinion_scatter
from .pareto import pareto_plot


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        sys.exit(1)


def build_parser() -> _Parser:
    parser = _Parser(prog="plots",
                     description="Figures from stancesim CSV exports")
    sub = parser.add_subparsers(dest="command", required=True)

    p_pareto = sub.add_parser(
        "pareto", help="CTR vs JSD-O Pareto frontier from an aggregate CSV")
    p_pareto.add_argument("--in", dest="input", required=True,
                          help="aggregate.csv produced by stancesim analyze")
    p_pareto.add_argument("--scenario", required=True,
                          help="scenario id, or comma-separated ids for "
                               "side-by-side panels (e.g. 2,3)")
    p_pareto.add_argument("--out", required=True, help="output image path")

    p_opinions = sub.add_parser(
        "opinions", help="user-opinion scatter from run-directory exports")
    p_opinions.add_argument("--run", dest="runs", action="append",
                            required=True,
                            help="run directory (repeat for multiple rows)")
    p_opinions.add_argument("--out", required=True, help="output image path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "pareto":
            scenarios = [int(s) for s in args.scenario.split(",")]
            path = pareto_plot(args.input, scenarios, args.out)
        else:
            path = opinion_scatter(args.runs, args.out)
    except (ValueError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
