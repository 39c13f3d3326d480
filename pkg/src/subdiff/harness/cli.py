"""``subdiff`` command line: run one experiment from a JSON configuration.

Exit status: 0 when every check passes, 1 on a tolerance failure, 2 on a
configuration error, 3 on any other error.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback

from ..errors import ConfigError
from .config import KINDS, load_config
from .experiments import run_experiment

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3


def build_parser():
    p = argparse.ArgumentParser(
        prog="subdiff",
        description="Compare time-changed SDE simulations with fractional PDE solutions and closed forms.",
    )
    p.add_argument("kind", choices=KINDS, help="experiment kind")
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--paths", type=int, help="override the number of Monte Carlo paths")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument(
        "--workers", type=int, default=None,
        help="worker processes for path generation (default: $SUBDIFF_WORKERS or 1)",
    )
    return p


def _workers(arg):
    if arg is not None:
        return arg
    env = os.environ.get("SUBDIFF_WORKERS")
    if env is None:
        return 1
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"SUBDIFF_WORKERS: expected an integer, got {env!r}") from None


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, kind=args.kind)
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.paths is not None:
            changes["n_paths"] = args.paths
        if args.out is not None:
            changes["output"] = args.out
        if changes:
            cfg = cfg.replace(**changes)
        workers = _workers(args.workers)
        if workers < 1:
            raise ConfigError("--workers: must be at least 1")
    except ConfigError as exc:
        print(f"subdiff: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run_experiment(cfg, workers=workers)
    except ConfigError as exc:
        print(f"subdiff: configuration error in {cfg.kind}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - every failure maps to an exit status
        traceback.print_exc()
        print(f"subdiff: internal error in {cfg.kind}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    sys.stdout.write(report.to_text())
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
