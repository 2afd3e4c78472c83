"""``shiftres run <config-file>`` entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from . import harness
from .errors import ConfigurationError, DivergenceError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DIVERGENCE = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shiftres", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one sweep described by a config file")
    run.add_argument("config", help="flat key = value config file")
    run.add_argument("--task", choices=sorted(harness.TASK_PRESETS))
    run.add_argument("--sweep", choices=harness.SWEEPS)
    run.add_argument("--seed", type=int)
    run.add_argument("--jobs", type=int)
    run.add_argument("--out")
    run.add_argument("--format", choices=("csv", "json"))
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = harness.load_config(args.config)
        for key in ("task", "sweep", "seed", "jobs", "out", "format"):
            value = getattr(args, key)
            if value is not None:
                setattr(config, key, value)
        if config.seed < 0:
            raise ConfigurationError("seed must be a non-negative integer")
        config = config.resolved()
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = harness.run(config)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, NumericalError) as exc:
        print(f"numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE

    try:
        paths = harness.emit(result, config.out, config.format)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in paths:
        print(path)
    if result.rows and all(row.note for row in result.rows):
        print("every grid point failed", file=sys.stderr)
        return EXIT_DIVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
