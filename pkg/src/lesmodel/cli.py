"""``les`` command line: one subcommand per experiment kind."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .config import KINDS, ConfigError, build_config, parse_config
from .experiments import run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="les", description="Filtered Burgers experiments and oracle suites.")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", help="experiment config file (defaults are used when omitted)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--fine-dx", type=float, help="fine reference step for forced-periodic")
        p.add_argument("--seed", type=int, help="seed for the randomized oracle rows")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config, args.kind) if args.config else build_config(args.kind)
        overrides = {k: v for k, v in (("fine_dx", args.fine_dx), ("seed", args.seed)) if v is not None}
        if args.fine_dx is not None and not args.fine_dx > 0:
            raise ConfigError("--fine-dx must be positive")
        cfg = dataclasses.replace(cfg, **overrides)
    except ConfigError as exc:
        print(f"les: {exc}", file=sys.stderr)
        return 2
    report = run_experiment(cfg, args.out)
    sys.stdout.write(report.render(with_timings=args.verbose))
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
