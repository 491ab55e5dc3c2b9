"""Command line entry point: ``pintsdc run`` and ``pintsdc plot``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, dump_config, parse_config
from .experiment import EXIT_OK, run_experiment
from .plotting import KINDS, PlotError, emit_plotdata

LOG_ENV = "PINTSDC_LOG_LEVEL"
EXIT_USAGE = 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pintsdc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment description")
    run.add_argument("--config", required=True, help="TOML experiment description")
    run.add_argument("--out", default="out", help="output directory (default: out)")
    run.add_argument("--num-procs", type=int, help="override the number of parallel steps")
    run.add_argument("--mode", choices=("emulated", "threaded"), help="override the execution mode")
    run.add_argument("--seed", type=int, help="override the fault pattern seed")
    run.add_argument("--echo", action="store_true", help="print the full description and exit")

    plot = sub.add_parser("plot", help="write figure data and PNG from run output")
    plot.add_argument("--stats", required=True, help="run output directory")
    plot.add_argument("--kind", required=True, choices=KINDS)
    plot.add_argument("--out", help="destination directory (default: the stats directory)")
    return parser


def _setup_logging(level):
    env = os.environ.get(LOG_ENV)
    if env:
        level = int(env) if env.isdigit() else getattr(logging, env.upper(), level)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("pintsdc").setLevel(level)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            desc = parse_config(args.config)
            _setup_logging(desc.tree["controller"]["logger_level"])
            if args.echo:
                sys.stdout.write(dump_config(desc))
                return EXIT_OK
            return run_experiment(desc, args.out, num_procs=args.num_procs, mode=args.mode,
                                  seed=args.seed)
        _setup_logging(logging.WARNING)
        for path in emit_plotdata(args.stats, args.kind, args.out):
            print(path)
        return EXIT_OK
    except (ConfigError, PlotError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
