"""Ensemble runs of the cell problems.

Expectations are approximated by periodization: each realization is drawn on a torus
of ``L`` model periods, its cell quantities are computed, and the results are averaged
over seeds. Realizations run in parallel and are always reduced in seed order.
"""

import logging

import numpy as np

from src.config import settings
from src.infrastructure.parallel import parallel_map
from src.models import IndicatorGrid, InclusionSet
from src.modules.cell.service import compute_homogenized_data, solve_resonant_cell
from src.modules.geometry.exceptions import ConnectivityError, FullCoverageError, ResampleRequired
from src.modules.geometry.schemas import RasterRule
from src.modules.geometry.service import rasterize, sample_geometry, tile
from .exceptions import DuplicateSeedError, InsufficientPeriodsError, ModelInfeasibleError
from .schemas import EnsembleReport, ErgodicReport, ErgodicRow, RealizationResult

logger = logging.getLogger(__name__)

REJECTION_LIMIT = 0.5
VARIANCE_SAFETY = 1.5
REJECTED = (ResampleRequired, ConnectivityError, FullCoverageError)


def derive_seeds(base_seed: int, count: int) -> list[int]:
    """Independent per-realization seeds spawned from ``base_seed``.

    Realization ``i`` always gets the same seed, whatever ``count`` is.
    """
    children = np.random.SeedSequence(base_seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint32)[0]) for child in children]


def realization_seeds(ensemble) -> list[int]:
    seeds = list(ensemble.seeds) if ensemble.seeds is not None else derive_seeds(ensemble.base_seed, ensemble.realizations)
    repeated = sorted({s for s in seeds if seeds.count(s) > 1})
    if repeated:
        raise DuplicateSeedError(repeated)
    return seeds


def _retry_seed(seed: int, attempt: int) -> int:
    if attempt == 0:
        return seed
    return int(np.random.SeedSequence([seed, attempt]).generate_state(1, dtype=np.uint32)[0])


def sample_scaled(geometry_config, copies: int, seed: int) -> InclusionSet:
    """Draw the model on a torus of ``copies`` model periods per axis.

    Deterministic lattices are tiled; random models are drawn afresh on the larger
    cell at the same intensity.
    """
    if copies == 1 or geometry_config.model == "PeriodicLattice":
        return tile(sample_geometry(geometry_config, seed), copies)
    update = {}
    if geometry_config.model == "ChessPercolation":
        update["lattice_size"] = geometry_config.lattice_size * copies
    else:
        update["period"] = geometry_config.period * copies
        if getattr(geometry_config, "target_count", None):
            update["target_count"] = geometry_config.target_count * copies**geometry_config.dim
    return sample_geometry(geometry_config.model_copy(update=update), seed)


def draw_realization(
    geometry_config,
    seed: int,
    copies: int,
    resolution: int,
    rule: RasterRule = RasterRule.CENTER,
) -> tuple[InclusionSet, IndicatorGrid, int]:
    """Draw until the rasterized geometry passes its checks.

    Returns the set, its indicator and the number of draws used. Gives up after
    ``settings.MAX_RESAMPLE`` draws.
    """
    for attempt in range(settings.MAX_RESAMPLE):
        inclusions = sample_scaled(geometry_config, copies, _retry_seed(seed, attempt))
        try:
            return inclusions, rasterize(inclusions, resolution * copies, rule), attempt + 1
        except REJECTED as e:
            logger.warning(f"Realization seed={seed} rejected on draw {attempt + 1}: {e}")
    raise ModelInfeasibleError(settings.MAX_RESAMPLE, settings.MAX_RESAMPLE)


def _stderr(values: np.ndarray) -> np.ndarray:
    if values.shape[0] < 2:
        return np.zeros(values.shape[1:])
    return values.std(axis=0, ddof=1) / np.sqrt(values.shape[0])


def ensemble_cell_run(
    geometry_config,
    ensemble,
    rule: RasterRule = RasterRule.CENTER,
    threads: int | None = None,
) -> EnsembleReport:
    """Mean and standard error of ``a_bar``, ``E[v]`` and the volume fraction over realizations."""
    seeds = realization_seeds(ensemble)
    logger.info(f"Ensemble of {len(seeds)} realizations of {geometry_config.model} on {ensemble.copies}-period cells")

    def run(seed: int) -> RealizationResult:
        inclusions, chi, attempts = draw_realization(geometry_config, seed, ensemble.copies, ensemble.resolution, rule)
        hd = compute_homogenized_data(chi, threads=1, with_flux=False)
        return RealizationResult(
            seed=seed,
            attempts=attempts,
            count=inclusions.count,
            a_bar=hd.a_bar.tolist(),
            mean_v=hd.mean_v,
            vol_frac=hd.vol_frac,
        )

    results = sorted(parallel_map(run, seeds, threads), key=lambda r: r.seed)
    attempts = sum(r.attempts for r in results)
    rejections = attempts - len(results)
    if rejections > REJECTION_LIMIT * attempts:
        raise ModelInfeasibleError(rejections, attempts)

    a_bar = np.array([r.a_bar for r in results])
    mean_v = np.array([r.mean_v for r in results])
    vol_frac = np.array([r.vol_frac for r in results])
    report = EnsembleReport(
        model=geometry_config.model,
        realizations=len(results),
        copies=ensemble.copies,
        resolution=ensemble.resolution,
        seeds=[r.seed for r in results],
        rejections=rejections,
        a_bar_mean=a_bar.mean(axis=0).tolist(),
        a_bar_stderr=_stderr(a_bar).tolist(),
        mean_v_mean=float(mean_v.mean()),
        mean_v_stderr=float(_stderr(mean_v)),
        vol_frac_mean=float(vol_frac.mean()),
        vol_frac_stderr=float(_stderr(vol_frac)),
        results=results,
    )
    logger.info(
        f"Ensemble done: vol_frac {report.vol_frac_mean:.5f} +- {report.vol_frac_stderr:.1e}, "
        f"E[v] {report.mean_v_mean:.5f} +- {report.mean_v_stderr:.1e}, {rejections} rejections"
    )
    return report


def _spatial_average(chi: IndicatorGrid, quantity: str) -> float:
    if quantity == "vol_frac":
        return chi.volume_fraction
    return solve_resonant_cell(chi)[1]


def ergodic_average_check(
    geometry_config,
    ensemble,
    quantity: str = "vol_frac",
    periods: list[int] | None = None,
    rule: RasterRule = RasterRule.CENTER,
    threads: int | None = None,
) -> ErgodicReport:
    """Across-seed variance of the spatial average of ``quantity`` for each cell period ``L``."""
    periods = sorted(set(periods if periods is not None else ensemble.periods))
    if len(periods) < 2:
        raise InsufficientPeriodsError(len(periods))
    seeds = sorted(realization_seeds(ensemble))
    rows = []
    for copies in periods:
        def run(seed: int, copies=copies) -> float:
            _, chi, _ = draw_realization(geometry_config, seed, copies, ensemble.resolution, rule)
            return _spatial_average(chi, quantity)

        values = np.array(parallel_map(run, seeds, threads))
        variance = float(values.var(ddof=1)) if len(values) > 1 else 0.0
        rows.append(ErgodicRow(copies=copies, realizations=len(values), mean=float(values.mean()), variance=variance))
        logger.info(f"L={copies}: mean {quantity} {values.mean():.5f}, variance {variance:.3e}")
    nonincreasing = all(
        b.variance <= VARIANCE_SAFETY * a.variance + 1e-15 for a, b in zip(rows, rows[1:])
    )
    if not nonincreasing:
        logger.warning(f"Variance of {quantity} does not decay with the cell period")
    return ErgodicReport(quantity=quantity, rows=rows, safety=VARIANCE_SAFETY, nonincreasing=nonincreasing)
