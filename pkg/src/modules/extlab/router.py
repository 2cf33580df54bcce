"""Extlab router - the ``extlab`` subcommand."""

import logging
from pathlib import Path

import pandas as pd

from src.app.context import RunOptions
from src.config.experiment import CellConfig, ExperimentConfig, ExtlabConfig
from src.infrastructure.storage import config_hash, write_csv, write_json
from src.models import InclusionSet
from src.modules.geometry.schemas import FixedRadius
from src.modules.geometry.service import sample_geometry, sample_hard_discs_rsa, sample_poisson_halfgap
from .schemas import SurveyReport
from .service import eps_stability, extension_constant_survey

logger = logging.getLogger(__name__)


def default_families(seed: int = 0) -> dict[str, InclusionSet]:
    """A well-separated RSA family and a Poisson half-gap family with tangent-scale gaps."""
    return {
        "separated": sample_hard_discs_rsa(12.0, FixedRadius(radius=0.08), 0.05, seed=seed),
        "tangent": sample_poisson_halfgap(20.0, seed=seed),
    }


def survey_frame(report: SurveyReport) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in report.rows])


def run_extlab(config: ExperimentConfig | None, options: RunOptions) -> dict[str, Path]:
    """Extension constants of the configured geometry, or of the two reference families."""
    config = config or ExperimentConfig(name="extlab")
    extlab = config.extlab or ExtlabConfig()
    cell = config.cell or CellConfig()
    digest = config_hash(config)
    if config.geometry is not None:
        families = {config.geometry.model: sample_geometry(config.geometry)}
    else:
        logger.info("No [geometry] section; surveying the separated and tangent reference families")
        families = default_families(extlab.seed)

    report = extension_constant_survey(
        families, extlab.p, extlab.resolutions, extlab.samples, extlab.seed, cell.rule, options.threads
    )
    written = {
        "survey": write_csv(options.out / "survey.csv", survey_frame(report), digest),
        "survey_summary": write_json(options.out / "survey.json", report, digest),
    }
    if extlab.stability_eps:
        rows = {
            family: [
                row.model_dump()
                for row in eps_stability(
                    inclusions, extlab.stability_eps, extlab.stability_cells, max(extlab.p), extlab.samples,
                    extlab.seed, options.threads,
                )
            ]
            for family, inclusions in families.items()
        }
        written["stability"] = write_json(options.out / "stability.json", {"p": max(extlab.p), "families": rows}, digest)
    return written


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(
        "extlab", parents=parents, help="Survey harmonic-extension constants C(p, family, n)"
    )
    parser.set_defaults(handler=run_extlab, needs_config=False)
