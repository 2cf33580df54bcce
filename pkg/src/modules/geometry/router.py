"""Geometry router - the ``geometry`` subcommand."""

import logging
from pathlib import Path

import pandas as pd

from src.app.context import RunOptions
from src.config.experiment import CellConfig, ExperimentConfig
from src.infrastructure.storage import config_hash, write_csv, write_indicator, write_json
from .schemas import SeparationReport
from .service import check_disjoint, rasterize, sample_geometry, separation_moments

logger = logging.getLogger(__name__)


def separation_frame(report: SeparationReport) -> pd.DataFrame:
    frame = pd.DataFrame([item.model_dump() for item in report.inclusions])
    frame["moment_nu"] = report.moment_nu
    frame["moment_mu"] = report.moment_mu
    frame["admissible_p"] = report.admissible_p
    return frame


def run_geometry(config: ExperimentConfig, options: RunOptions) -> dict[str, Path]:
    """Sample the configured geometry and write it, its bitmap and its separation statistics."""
    section = config.require("geometry")
    cell = config.cell or CellConfig()
    digest = config_hash(config)
    inclusions = sample_geometry(section)
    check_disjoint(inclusions)
    indicator = rasterize(inclusions, cell.resolution, cell.rule)
    logger.info(f"Geometry {inclusions.model.value}: {inclusions.count} inclusions, fraction {indicator.volume_fraction:.5f}")

    written = {
        "geometry": write_json(options.out / "geometry.json", inclusions, digest),
        "indicator": write_indicator(options.out / "indicator.bin", indicator),
    }
    if inclusions.count >= 2:
        report = separation_moments(inclusions, cell.alpha, cell.beta)
        written["separation"] = write_csv(options.out / "separation.csv", separation_frame(report), digest)
        written["separation_summary"] = write_json(
            options.out / "separation.json", report.model_dump(mode="json", exclude={"inclusions"}), digest
        )
    else:
        logger.warning("Fewer than two inclusions; separation statistics skipped")
    return written


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(
        "geometry", parents=parents, help="Sample a geometry; write its JSON, bitmap and separation table"
    )
    parser.set_defaults(handler=run_geometry, needs_config=True)
