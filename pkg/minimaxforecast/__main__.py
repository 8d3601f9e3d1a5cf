"""Command line entry point: ``minimaxforecast [--config PATH] [--kind KIND] ...``.

Exit status: 0 on success, 1 for an invalid configuration, 2 when an
invariant is violated (including a failed verify suite), 3 when a horizon
exceeds an enumeration cap.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Any, Sequence

from pydantic import ValidationError

from minimaxforecast.config import SUITES, ExperimentSpec, load_config, validate_spec
from minimaxforecast.errors import ArgumentError, CapacityError, ConfigError, DimensionError, ErmFailure, InvariantViolation
from minimaxforecast.runner import run

logger = logging.getLogger("minimaxforecast")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2
EXIT_CAPACITY = 3

KINDS = ("verify", "mf", "mf_star", "r2", "transductive", "cf", "rademacher")


def _int_list(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(item) for item in raw.split(",") if item.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}") from None


def _name_list(raw: str) -> tuple[str, ...]:
    return tuple(item.strip() for item in raw.split(",") if item.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minimaxforecast",
        description="Run and verify minimax forecasting experiments.",
    )
    parser.add_argument("--config", help="experiment config file (key = value lines)")
    parser.add_argument("--kind", choices=KINDS, help="experiment kind; overrides the config")
    parser.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    parser.add_argument("--trials", type=int, help="number of independent seeded trials")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--workers", type=int, help="worker processes for independent trials (default: every processor)")
    parser.add_argument("--horizons", type=_int_list, help="comma-separated horizons for a regret curve")
    parser.add_argument(
        "--suites",
        type=_name_list,
        help=f"comma-separated verify suites, or 'all' ({', '.join(SUITES)})",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="logging level on stderr (default: INFO)",
    )
    return parser


def resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    """The config file's spec with command line flags applied on top."""
    base = load_config(args.config) if args.config else ExperimentSpec()
    overrides: dict[str, Any] = {
        field: value
        for field, value in (
            ("kind", args.kind),
            ("seed", args.seed),
            ("trials", args.trials),
            ("out", args.out),
            ("workers", args.workers),
            ("horizons", args.horizons),
            ("suites", args.suites),
        )
        if value is not None
    }
    if not overrides:
        return base
    return validate_spec({**base.model_dump(exclude_unset=True), **overrides})


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        spec = resolve_spec(args)
        summary = run(spec)
    except (ConfigError, ValidationError, ArgumentError, DimensionError) as exc:
        logger.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    except (InvariantViolation, ErmFailure) as exc:
        logger.error("invariant violated: %s", exc)
        return EXIT_INVARIANT
    except CapacityError as exc:
        logger.error("capacity exceeded: %s", exc)
        return EXIT_CAPACITY
    if not summary.get("passed", True):
        logger.error("verification failed")
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
