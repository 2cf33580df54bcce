"""
Command-line entry point of the double-porosity laboratory.

    python -m src.main <subcommand> [--config PATH] [--out DIR] [--threads N]
                       [--quick] [--reproducible] [--log-level LEVEL]
"""

import argparse
import logging
import sys
from pathlib import Path

from src.app.context import RunOptions
from src.app.routes import register_commands
from src.config import settings
from src.config.exceptions import ConfigError
from src.config.experiment import load_experiment
from src.config.logging import LogLevels, configure_logging
from src.infrastructure.errors import ExitCode, LabError

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Experiment TOML file")
    common.add_argument("--out", type=Path, default=Path("out"), help="Output directory (DPLB_OUT overrides)")
    common.add_argument("--threads", type=int, default=None, help="Worker threads (0: one per core)")
    common.add_argument("--quick", action="store_true", help="Reduced resolutions for the acceptance suite")
    common.add_argument("--reproducible", action="store_true", help="Byte-stable outputs (no timings, fixed SVG ids)")
    common.add_argument(
        "--log-level", default=settings.LOG_LEVEL, choices=[level.value for level in LogLevels], type=str.upper
    )

    parser = argparse.ArgumentParser(prog="dporolab", description=f"{settings.PROJECT_NAME} {settings.VERSION}")
    parser.add_argument("--version", action="version", version=settings.VERSION)
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_commands(subparsers, [common])
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    out = Path(settings.OUT) if settings.OUT else args.out
    options = RunOptions(out=out, threads=args.threads, quick=args.quick, reproducible=args.reproducible)

    config = None
    if args.needs_config:
        if args.config is None:
            raise ConfigError(f"The {args.command} subcommand needs --config")
        config = load_experiment(args.config)
    elif args.config is not None:
        config = load_experiment(args.config)

    written = args.handler(config, options)
    for name, path in written.items():
        logger.info(f"{name}: {path}")
    return ExitCode.OK


def main(argv: list[str] | None = None) -> int:
    try:
        return run(argv)
    except LabError as e:
        logger.error(f"{type(e).__name__}: {e.detail}")
        print(e.detail, file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.error(f"Unhandled exception: {str(e)}", exc_info=True)
        print(f"internal error: {e}", file=sys.stderr)
        return ExitCode.INVARIANT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
