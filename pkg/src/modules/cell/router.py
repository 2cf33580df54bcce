"""Cell router - the ``cell`` subcommand."""

import logging
from pathlib import Path

import pandas as pd

from src.app.context import RunOptions
from src.config.experiment import CellConfig, ExperimentConfig
from src.infrastructure.storage import config_hash, write_csv, write_grid_function, write_json
from src.modules.geometry.service import rasterize, sample_geometry
from src.models import IndicatorGrid
from src.modules.stochastic.service import ensemble_cell_run, ergodic_average_check
from .schemas import HomogenizedData
from .service import (
    IDENTITY_TOL,
    compute_homogenized_data,
    corrector_defect,
    corrector_moment_report,
    solve_corrector_dirichlet,
    solve_corrector_massive,
)

logger = logging.getLogger(__name__)


def residual_frame(hd: HomogenizedData) -> pd.DataFrame:
    rows = []
    for name, value in sorted(hd.residuals.items()):
        limit = 1e-6 if name == "consistency" else IDENTITY_TOL
        rows.append({"quantity": name, "value": value, "limit": limit, "passed": value <= limit})
    return pd.DataFrame(rows)


def massive_frame(
    hd: HomogenizedData,
    chi: IndicatorGrid,
    eps_list: list[float],
    threads: int | None,
    dirichlet: bool = False,
) -> pd.DataFrame:
    """Distance of the massive corrector gradients to the soft ones outside F, per eps.

    With ``dirichlet`` set, each row also carries the largest relative gap between the
    energy densities of the Dirichlet box corrector and the soft corrector.
    """
    soft = hd.correctors
    rows = []
    for eps in sorted(eps_list, reverse=True):
        massive = solve_corrector_massive(chi, eps, threads=threads)
        row = {"eps": eps, "corrector_defect": corrector_defect(soft, massive, chi)}
        if dirichlet:
            box = solve_corrector_dirichlet(chi, eps, threads=threads)
            row["dirichlet_energy_gap"] = max(
                abs(box.energy[i] - soft.energy[i]) / soft.energy[i] for i in soft.directions
            )
        rows.append(row)
    return pd.DataFrame(rows)


def run_cell(config: ExperimentConfig, options: RunOptions) -> dict[str, Path]:
    """Cell problems for the configured geometry; with an ``[ensemble]`` section, the ensemble average too."""
    section = config.require("geometry")
    cell = config.cell or CellConfig()
    digest = config_hash(config)
    written = {}

    inclusions = sample_geometry(section)
    chi = rasterize(inclusions, cell.resolution, cell.rule)
    hd = compute_homogenized_data(chi, options.threads, with_flux=cell.flux_correctors)
    written["cell"] = write_json(options.out / "cell.json", hd.summary(), digest)
    written["residuals"] = write_csv(options.out / "residuals.csv", residual_frame(hd), digest)
    written["v"] = write_grid_function(options.out / "v.bin", hd.v)
    if cell.flux_correctors:
        moments = corrector_moment_report(hd.correctors.phi, hd.sigma, hd.theta)
        written["moments"] = write_json(options.out / "corrector_moments.json", moments, digest)
    if cell.massive_eps:
        frame = massive_frame(hd, chi, cell.massive_eps, options.threads, cell.dirichlet_correctors)
        written["massive"] = write_csv(options.out / "massive_correctors.csv", frame, digest)

    if config.ensemble is not None:
        ensemble = ensemble_cell_run(section, config.ensemble, cell.rule, options.threads)
        written["ensemble"] = write_json(
            options.out / "ensemble.json", {"config": config.model_dump(mode="json"), **ensemble.model_dump(mode="json")}, digest
        )
        if len(set(config.ensemble.periods)) >= 2:
            ergodic = ergodic_average_check(
                section, config.ensemble, config.ensemble.quantity, rule=cell.rule, threads=options.threads
            )
            written["ergodic"] = write_json(options.out / "ergodic.json", ergodic, digest)
    logger.info(f"Cell outputs written to {options.out}")
    return written


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser(
        "cell", parents=parents, help="Correctors, a_bar, E[v], flux and inclusion correctors of the periodic cell"
    )
    parser.set_defaults(handler=run_cell, needs_config=True)
