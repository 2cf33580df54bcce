"""Verify router - the ``verify`` subcommand."""

import logging
from pathlib import Path

import pandas as pd

from src.app.context import RunOptions
from src.config.experiment import ExperimentConfig
from src.infrastructure.storage import write_csv, write_json
from .exceptions import AcceptanceError
from .schemas import VerifyReport
from .service import format_table, run_acceptance

logger = logging.getLogger(__name__)


def verify_frame(report: VerifyReport) -> pd.DataFrame:
    return pd.DataFrame([check.model_dump() for check in report.checks])


def run_verify(config: ExperimentConfig | None, options: RunOptions) -> dict[str, Path]:
    """Run the acceptance suite, print its table and fail when any check fails."""
    report = run_acceptance(quick=options.quick, threads=options.threads)
    if options.reproducible:
        for check in report.checks:
            check.seconds = 0.0
    print(format_table(report))
    written = {
        "verify": write_csv(options.out / "verify.csv", verify_frame(report)),
        "verify_summary": write_json(options.out / "verify.json", report),
    }
    if not report.passed:
        raise AcceptanceError(report.failed)
    return written


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("verify", parents=parents, help="Run the acceptance suite")
    parser.set_defaults(handler=run_verify, needs_config=False)
