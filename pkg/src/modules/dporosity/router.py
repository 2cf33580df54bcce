"""Double-porosity router - the ``solve`` and ``sweep`` subcommands."""

import logging
from pathlib import Path

from src.app.context import RunOptions
from src.config.experiment import CellConfig, ExperimentConfig
from src.infrastructure.storage import (
    config_hash,
    grid_function_frame,
    write_csv,
    write_grid_function,
    write_json,
    write_loglog_svg,
)
from src.models import Grid
from src.modules.cell.service import compute_homogenized_data
from src.modules.geometry.service import rasterize, sample_geometry
from src.modules.mesh.service import energy_identity_residual
from src.modules.stochastic.service import derive_seeds
from .diagnostics import error_report, two_scale_expansion
from .schemas import SweepReport
from .service import (
    as_grid_function,
    build_eps_problem,
    cells_per_period,
    manufactured_rhs,
    solve_eps_problem,
    solve_homogenized,
)
from .sweep import SweepCase, aggregate_sweeps, run_sweep, source_for, sweep_frame

logger = logging.getLogger(__name__)

REFERENCE_SLOPES = (0.5, 1.0)


def run_solve(config: ExperimentConfig, options: RunOptions) -> dict[str, Path]:
    """One eps-solve with its homogenized limit and error against the two-scale expansion."""
    section, solve = config.require("geometry", "solve")
    cell = config.cell or CellConfig()
    digest = config_hash(config)

    inclusions = sample_geometry(section)
    cells = cells_per_period(solve.eps, inclusions.period, solve.domain, solve.resolution)
    hd = compute_homogenized_data(rasterize(inclusions, cells, cell.rule), options.threads, with_flux=False)

    f, target = source_for(solve.source.value, solve.domain)
    if target is not None:
        grid = Grid(solve.resolution, inclusions.dim, solve.domain.side, periodic=solve.domain.periodic)
        f = manufactured_rhs(hd, as_grid_function(target, grid))
    p = build_eps_problem(inclusions, solve.domain, solve.eps, f, solve.resolution, cell.rule)
    u_eps = solve_eps_problem(p)
    u_bar = solve_homogenized(hd, p.f, solve.domain, solve.resolution)
    expansion = two_scale_expansion(u_bar, hd.correctors, hd.v, p)
    row = error_report(u_eps, expansion, p, energy_residual=energy_identity_residual(p.operator, u_eps, p.f))

    summary = {
        "eps": solve.eps,
        "resolution": solve.resolution,
        "domain": solve.domain.model_dump(mode="json"),
        "source": solve.source.value,
        "inclusion_count": p.inclusion_count,
        "cells_per_period": cells,
        "homogenized": hd.summary().model_dump(mode="json"),
        "errors": row.model_dump(mode="json"),
    }
    return {
        "solve": write_json(options.out / "solve.json", summary, digest),
        "u_eps": write_grid_function(options.out / "u_eps.bin", u_eps),
        "u_eps_csv": write_csv(options.out / "u_eps.csv", grid_function_frame(u_eps), digest),
    }


def _sweep_case(geometry_config, config: ExperimentConfig, options: RunOptions, seed: int | None = None) -> SweepCase:
    sweep = config.sweep
    cell = config.cell or CellConfig()
    inclusions = sample_geometry(geometry_config, seed)
    chi = rasterize(inclusions, sweep.cells_per_period, cell.rule)
    hd = compute_homogenized_data(chi, options.threads, with_flux=False)
    f, target = source_for(sweep.source.value, sweep.domain)
    return SweepCase(
        geometry=inclusions,
        hd=hd,
        domain=sweep.domain,
        cells=sweep.cells_per_period,
        f=f if f is not None else 1.0,
        target=target,
        smoothing=sweep.smoothing,
        coupled=sweep.coupled,
        rule=cell.rule,
    )


def sweep_series(report: SweepReport) -> dict[str, tuple[list[float], list[float]]]:
    series = {
        "total": (report.eps, [row.total for row in report.rows]),
        "err_h1_outside": (report.eps, [row.err_h1_outside for row in report.rows]),
        "err_l2_inside": (report.eps, [row.err_l2_inside for row in report.rows]),
    }
    if all(row.coupled_l2 is not None for row in report.rows):
        series["coupled_l2"] = (report.eps, [row.coupled_l2 for row in report.rows])
    anchor_eps, anchor = report.eps[0], report.rows[0].total
    for order in REFERENCE_SLOPES:
        if anchor > 0:
            series[f"eps^{order:g}"] = (report.eps, [anchor * (e / anchor_eps) ** order for e in report.eps])
    return series


def run_sweep_command(config: ExperimentConfig, options: RunOptions) -> dict[str, Path]:
    """Error sweep over the configured eps list; with several realizations, their mean and standard error."""
    section, sweep = config.require("geometry", "sweep")
    digest = config_hash(config)

    if sweep.realizations > 1:
        base_seed = getattr(section, "seed", 0)
        reports = [
            run_sweep(_sweep_case(section, config, options, seed), sweep.eps, options.threads)
            for seed in derive_seeds(base_seed, sweep.realizations)
        ]
        report = aggregate_sweeps(reports)
    else:
        report = run_sweep(_sweep_case(section, config, options), sweep.eps, options.threads)

    slopes = {name: fit.slope for name, fit in report.slopes.items() if fit.slope is not None}
    return {
        "sweep": write_csv(options.out / "sweep.csv", sweep_frame(report), digest),
        "sweep_summary": write_json(options.out / "sweep.json", report, digest),
        "plot": write_loglog_svg(
            options.out / "sweep.svg",
            sweep_series(report),
            title=f"{config.name}: error against eps ({sweep.domain.kind.value})",
            slopes=slopes,
            reproducible=options.reproducible,
        ),
    }


def register(subparsers, parents) -> None:
    solve = subparsers.add_parser(
        "solve", parents=parents, help="Solve one eps-problem and compare it with its two-scale expansion"
    )
    solve.set_defaults(handler=run_solve, needs_config=True)
    sweep = subparsers.add_parser("sweep", parents=parents, help="Error sweep over eps with fitted convergence slopes")
    sweep.set_defaults(handler=run_sweep_command, needs_config=True)
