"""Inclusion processes, rasterization and separation diagnostics."""

import logging
import warnings
from itertools import product

import numpy as np
from scipy.spatial import cKDTree

from src.config import settings
from src.models import (
    Capsule,
    CellCluster,
    Disc,
    Grid,
    InclusionModel,
    InclusionSet,
    IndicatorGrid,
)
from . import shapes
from .exceptions import (
    ConnectivityError,
    FullCoverageError,
    GeometryError,
    GeometryOverlapError,
    InsufficientInclusionsError,
    InvalidGeometryParameterError,
    PercolationThresholdWarning,
    ResampleRequired,
    SaturationWarning,
)
from .schemas import (
    FixedRadius,
    InclusionSeparation,
    RadiusLaw,
    RasterRule,
    SeparationReport,
)
from .unionfind import label_components, unwrap_component

logger = logging.getLogger(__name__)

PERCOLATION_THRESHOLD = 0.41
AREA_SUBSAMPLES = 4


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def sample_periodic_lattice(radius: float, period: float = 1.0, dim: int = 2) -> InclusionSet:
    """One disc of ``radius`` centered in each fundamental cell."""
    if period <= 0 or radius <= 0:
        raise InvalidGeometryParameterError(f"radius={radius} and period={period} must be positive")
    if radius >= period / 2:
        raise GeometryOverlapError(f"Disc of radius {radius} overlaps its periodic images (period {period})")
    disc = Disc(id=0, center=[period / 2] * dim, radius=radius)
    return InclusionSet(model=InclusionModel.PERIODIC_LATTICE, period=period, dim=dim, inclusions=[disc])


def _draw(law: RadiusLaw, rng: np.random.Generator) -> float:
    if isinstance(law, FixedRadius):
        return law.radius
    return float(rng.uniform(law.low, law.high))


def _target(intensity: float, period: float, dim: int, target_count: int | None) -> int:
    if target_count is not None:
        if target_count < 0:
            raise InvalidGeometryParameterError(f"target_count must be >= 0, got {target_count}")
        return target_count
    if intensity < 0:
        raise InvalidGeometryParameterError(f"intensity must be >= 0, got {intensity}")
    return int(round(intensity * period**dim))


def sample_hard_discs_rsa(
    intensity: float,
    radius_law: RadiusLaw,
    separation_margin: float,
    period: float = 1.0,
    seed: int = 0,
    dim: int = 2,
    target_count: int | None = None,
) -> InclusionSet:
    """Random sequential adsorption of discs with a relative separation margin.

    A candidate is accepted iff its gap to every accepted disc is at least
    ``separation_margin * max(r_n, r_m)``. Sampling stops at the target count
    (``intensity * period^dim`` unless given) or after ``RSA_BUDGET_FACTOR``
    attempts per target inclusion; in the latter case the set is flagged saturated.
    """
    if separation_margin < 0:
        raise InvalidGeometryParameterError(f"separation_margin must be >= 0, got {separation_margin}")
    if period <= 0:
        raise InvalidGeometryParameterError(f"period must be positive, got {period}")
    if radius_law.max_radius >= period / 2:
        raise GeometryOverlapError(f"Radius {radius_law.max_radius} does not fit in period {period}")
    target = _target(intensity, period, dim, target_count)
    rng = np.random.default_rng(seed)
    budget = settings.RSA_BUDGET_FACTOR * target

    centers = np.empty((0, dim))
    radii = np.empty(0)
    attempts = 0
    while radii.size < target and attempts < budget:
        attempts += 1
        center = rng.uniform(0.0, period, size=dim)
        radius = _draw(radius_law, rng)
        if radii.size:
            delta = centers - center
            delta -= period * np.round(delta / period)
            gaps = np.linalg.norm(delta, axis=1) - radii - radius
            if np.any(gaps < separation_margin * np.maximum(radii, radius)):
                continue
        centers = np.vstack([centers, center])
        radii = np.append(radii, radius)

    saturated = radii.size < target
    if saturated:
        logger.warning(f"RSA saturated: placed {radii.size}/{target} discs after {attempts} attempts")
        warnings.warn(f"RSA placed {radii.size} of {target} discs", SaturationWarning, stacklevel=2)
    else:
        logger.debug(f"RSA placed {radii.size} discs in {attempts} attempts (seed={seed})")
    inclusions = [Disc(id=i, center=c.tolist(), radius=float(r)) for i, (c, r) in enumerate(zip(centers, radii))]
    return InclusionSet(
        model=InclusionModel.HARD_DISCS_RSA,
        seed=seed,
        period=period,
        dim=dim,
        saturated=saturated,
        inclusions=inclusions,
    )


def halfgap_from_points(points: np.ndarray, period: float, seed: int = 0) -> InclusionSet:
    """Discs centered at ``points`` with radius half the nearest-neighbor torus distance."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] < 2:
        raise InsufficientInclusionsError(points.shape[0])
    wrapped = np.mod(points, period)
    tree = cKDTree(wrapped, boxsize=period)
    distances, _ = tree.query(wrapped, k=2)
    radii = distances[:, 1] / 2
    if np.any(radii <= 0):
        raise GeometryError("Coincident points give a zero radius")
    inclusions = [Disc(id=i, center=c.tolist(), radius=float(r)) for i, (c, r) in enumerate(zip(wrapped, radii))]
    return InclusionSet(
        model=InclusionModel.POISSON_HALF_GAP,
        seed=seed,
        period=period,
        dim=points.shape[1],
        inclusions=inclusions,
    )


def sample_poisson_halfgap(intensity: float, period: float = 1.0, seed: int = 0, dim: int = 2) -> InclusionSet:
    """Poisson points on the torus, each carrying the half-gap disc."""
    if intensity <= 0:
        raise InvalidGeometryParameterError(f"intensity must be positive, got {intensity}")
    rng = np.random.default_rng(seed)
    count = rng.poisson(intensity * period**dim)
    logger.debug(f"Poisson half-gap sample: {count} points (seed={seed})")
    points = rng.uniform(0.0, period, size=(count, dim))
    return halfgap_from_points(points, period, seed=seed)


def chess_from_colors(black: np.ndarray, seed: int = 0) -> InclusionSet:
    """Inclusions of a chess coloring: F is everything outside the largest spanning white cluster.

    Each edge-connected component of F becomes a ``CellCluster`` in unwrapped
    coordinates. Raises ``ResampleRequired`` if no white cluster spans the torus
    or a component of F winds around it.
    """
    black = np.asarray(black, dtype=bool)
    size = black.shape[0]
    white = ~black
    labels, count = label_components(white, periodic=True)
    spanning = None
    if count:
        sizes = np.bincount(labels.ravel(), minlength=count + 1)[1:]
        for label in np.argsort(-sizes, kind="stable") + 1:
            if sizes[label - 1] < size:
                break
            members = labels == label
            start = tuple(int(i) for i in np.argwhere(members)[0])
            _, winds = unwrap_component(members, start)
            if all(winds):
                spanning = members
                break
    if spanning is None:
        raise ResampleRequired("no spanning white cluster")

    inside = ~spanning
    f_labels, f_count = label_components(inside, periodic=True)
    inclusions = []
    for label in range(1, f_count + 1):
        members = f_labels == label
        start = tuple(int(i) for i in np.argwhere(members)[0])
        coords, winds = unwrap_component(members, start)
        if any(winds):
            raise ResampleRequired("an inclusion cluster wraps around the torus")
        inclusions.append(CellCluster(id=label - 1, cells=sorted(list(c) for c in coords.values())))
    logger.debug(f"Chess sample: {int(black.sum())} black cells, {f_count} inclusion clusters")
    return InclusionSet(
        model=InclusionModel.CHESS_PERCOLATION,
        seed=seed,
        period=float(size),
        dim=black.ndim,
        inclusions=inclusions,
    )


def sample_chess_percolation(mu: float, lattice_size: int, seed: int = 0) -> InclusionSet:
    """Random chess structure: unit squares independently black with probability ``mu``."""
    if not 0 <= mu < 1:
        raise InvalidGeometryParameterError(f"mu must lie in [0, 1), got {mu}")
    if lattice_size < 2:
        raise InvalidGeometryParameterError(f"lattice_size must be >= 2, got {lattice_size}")
    if mu >= PERCOLATION_THRESHOLD:
        logger.warning(f"mu={mu} is at or above the percolation threshold {PERCOLATION_THRESHOLD}")
        warnings.warn(f"mu={mu} >= {PERCOLATION_THRESHOLD}", PercolationThresholdWarning, stacklevel=2)
    rng = np.random.default_rng(seed)
    black = rng.random((lattice_size, lattice_size)) < mu
    return chess_from_colors(black, seed=seed)


def sample_random_capsules(
    intensity: float,
    length_law: RadiusLaw,
    width: float,
    separation: float,
    period: float = 1.0,
    seed: int = 0,
    dim: int = 2,
    target_count: int | None = None,
) -> InclusionSet:
    """Randomly oriented capsules of fixed ``width`` and random half-length.

    Sequential adsorption with an absolute minimum gap ``separation`` between
    capsules; same budget and saturation rule as the disc sampler.
    """
    if width <= 0 or separation < 0 or period <= 0:
        raise InvalidGeometryParameterError(
            f"width={width} and period={period} must be positive, separation={separation} >= 0"
        )
    if 2 * (length_law.max_radius + width) >= period:
        raise GeometryOverlapError(f"Capsules of half-length {length_law.max_radius} do not fit in period {period}")
    target = _target(intensity, period, dim, target_count)
    rng = np.random.default_rng(seed)
    budget = settings.RSA_BUDGET_FACTOR * target

    accepted: list[Capsule] = []
    attempts = 0
    while len(accepted) < target and attempts < budget:
        attempts += 1
        center = rng.uniform(0.0, period, size=dim)
        direction = rng.normal(size=dim)
        direction /= np.linalg.norm(direction)
        half = _draw(length_law, rng)
        candidate = Capsule(
            id=len(accepted),
            start=(center - half * direction).tolist(),
            end=(center + half * direction).tolist(),
            width=width,
        )
        if all(shapes.gap(candidate, other, period, periodic=True) >= separation for other in accepted):
            accepted.append(candidate)

    saturated = len(accepted) < target
    if saturated:
        logger.warning(f"Capsule RSA saturated: placed {len(accepted)}/{target} after {attempts} attempts")
        warnings.warn(f"Capsule RSA placed {len(accepted)} of {target}", SaturationWarning, stacklevel=2)
    return InclusionSet(
        model=InclusionModel.RANDOM_CAPSULES,
        seed=seed,
        period=period,
        dim=dim,
        saturated=saturated,
        inclusions=accepted,
    )


def tile(inclusions: InclusionSet, copies: int) -> InclusionSet:
    """Periodization of a set over ``copies**dim`` fundamental cells."""
    if copies < 1:
        raise InvalidGeometryParameterError(f"copies must be >= 1, got {copies}")
    has_clusters = any(isinstance(i, CellCluster) for i in inclusions.inclusions)
    if has_clusters and not float(inclusions.period).is_integer():
        raise InvalidGeometryParameterError("Cell clusters can only be tiled with an integer period")
    tiled = []
    for k in product(range(copies), repeat=inclusions.dim):
        offset = inclusions.period * np.asarray(k, dtype=float)
        for inc in inclusions.inclusions:
            tiled.append(shapes.translate(inc, offset, len(tiled)))
    return inclusions.model_copy(update={"period": inclusions.period * copies, "inclusions": tiled})


def sample_geometry(config, seed: int | None = None) -> InclusionSet:
    """Draw an inclusion set from a ``[geometry]`` experiment section.

    ``seed`` overrides the seed of the section (used for ensembles).
    """
    params = config.model_dump(exclude={"model"})
    if seed is not None and "seed" in params:
        params["seed"] = seed
    match config.model:
        case "PeriodicLattice":
            return sample_periodic_lattice(**params)
        case "HardDiscsRSA":
            params["radius_law"] = config.radius
            del params["radius"]
            return sample_hard_discs_rsa(**params)
        case "PoissonHalfGap":
            return sample_poisson_halfgap(**params)
        case "ChessPercolation":
            return sample_chess_percolation(**params)
        case "RandomCapsules":
            params["length_law"] = config.length
            del params["length"]
            return sample_random_capsules(**params)
    raise InvalidGeometryParameterError(f"Unknown inclusion model {config.model!r}")


# ---------------------------------------------------------------------------
# Exact predicates
# ---------------------------------------------------------------------------


def pairwise_gaps(inclusions: InclusionSet) -> np.ndarray:
    """Matrix of pairwise gaps; the diagonal holds the gap to the own periodic images."""
    items = inclusions.inclusions
    count = len(items)
    periodic = not inclusions.bounded
    period = inclusions.period
    if count and all(isinstance(i, Disc) for i in items):
        centers = np.array([i.center for i in items], dtype=float)
        radii = np.array([i.radius for i in items])
        delta = centers[:, None, :] - centers[None, :, :]
        if periodic:
            delta -= period * np.round(delta / period)
        gaps = np.linalg.norm(delta, axis=-1) - radii[:, None] - radii[None, :]
        np.fill_diagonal(gaps, period - 2 * radii if periodic else np.inf)
        return gaps
    gaps = np.empty((count, count))
    for i in range(count):
        gaps[i, i] = shapes.gap(items[i], items[i], period, periodic, same=True)
        for j in range(i + 1, count):
            gaps[i, j] = gaps[j, i] = shapes.gap(items[i], items[j], period, periodic)
    return gaps


def check_disjoint(inclusions: InclusionSet) -> None:
    """Raise ``GeometryOverlapError`` unless the open inclusions are pairwise disjoint and fit."""
    if not inclusions.inclusions:
        return
    gaps = pairwise_gaps(inclusions)
    bad = np.argwhere(gaps < -shapes.TANGENT_TOL)
    if bad.size:
        i, j = bad[0]
        if i == j:
            raise GeometryOverlapError(f"Inclusion {i} overlaps its own periodic image")
        raise GeometryOverlapError(f"Inclusions {i} and {j} overlap (gap {gaps[i, j]:.3e})")
    if inclusions.bounded:
        for inc in inclusions.inclusions:
            lo, hi = shapes.bounds(inc)
            if np.any(lo < 0) or np.any(hi > inclusions.period):
                raise GeometryOverlapError(f"Inclusion {inc.id} leaves the box")


# ---------------------------------------------------------------------------
# Rasterization
# ---------------------------------------------------------------------------


def _sample_offsets(dim: int, rule: RasterRule) -> np.ndarray:
    if rule == RasterRule.CENTER:
        return np.full((1, dim), 0.5)
    ticks = (np.arange(AREA_SUBSAMPLES) + 0.5) / AREA_SUBSAMPLES
    return np.array(list(product(ticks, repeat=dim)))


def rasterize_labels(
    inclusions: InclusionSet,
    resolution: int,
    rule: RasterRule = RasterRule.CENTER,
) -> tuple[np.ndarray, np.ndarray, Grid]:
    """Per-cell inclusion ids (-1 outside F) and unwrap offsets.

    ``offsets[i]`` is the periodic cell shift of the inclusion copy that covers
    cell ``i``: that copy lives in the cell ``k - offsets[i]`` of any tiling whose
    ``k``-th copy contains ``i``.
    """
    if resolution < 4:
        raise InvalidGeometryParameterError(f"resolution must be >= 4, got {resolution}")
    grid = Grid(resolution, inclusions.dim, inclusions.period, periodic=not inclusions.bounded)
    labels = np.full(grid.shape, -1, dtype=np.int64)
    offsets = np.zeros(grid.shape + (grid.dim,), dtype=np.int64)
    samples = _sample_offsets(grid.dim, RasterRule(rule))

    for inc in inclusions.inclusions:
        lo, hi = shapes.bounds(inc)
        first = np.floor(lo / grid.h).astype(np.int64)
        stop = np.ceil(hi / grid.h).astype(np.int64)
        ranges = [np.arange(a, b) for a, b in zip(first, stop)]
        index = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, grid.dim)
        if not grid.periodic:
            index = index[np.all((index >= 0) & (index < resolution), axis=1)]
        points = (index[:, None, :] + samples[None, :, :]) * grid.h
        inside = shapes.contains(inc, points)
        hit = inside.mean(axis=1) >= 0.5 if rule == RasterRule.AREA else inside[:, 0]
        index = index[hit]
        wrapped = np.mod(index, resolution)
        position = tuple(wrapped.T)
        free = labels[position] < 0
        if not free.all():
            logger.debug(f"Inclusion {inc.id}: {int((~free).sum())} cells already claimed")
        chosen = tuple(wrapped[free].T)
        labels[chosen] = inc.id
        offsets[chosen] = np.floor_divide(index[free], resolution)
    return labels, offsets, grid


def check_connectivity(indicator: IndicatorGrid) -> int:
    """Number of complement components; raises unless it is exactly one."""
    if indicator.cells.all():
        raise FullCoverageError()
    _, count = label_components(indicator.complement, periodic=indicator.grid.periodic)
    if count != 1:
        raise ConnectivityError(count)
    return count


def rasterize(
    inclusions: InclusionSet,
    resolution: int,
    rule: RasterRule = RasterRule.CENTER,
    check: bool = True,
) -> IndicatorGrid:
    """Binary indicator of F on an ``resolution**dim`` grid, with the connectivity check."""
    labels, _, grid = rasterize_labels(inclusions, resolution, rule)
    indicator = IndicatorGrid(
        cells=labels >= 0,
        grid=grid,
        provenance=f"{inclusions.model.value}:seed={inclusions.seed}",
    )
    if check:
        check_connectivity(indicator)
    logger.debug(f"Rasterized {inclusions.count} inclusions at n={resolution}: fraction {indicator.volume_fraction:.5f}")
    return indicator


# ---------------------------------------------------------------------------
# Separation statistics
# ---------------------------------------------------------------------------


def _moment(values: np.ndarray, exponent: float, volume: float) -> float:
    if np.any(values <= 0):
        return float("inf")
    return float(np.sum(values ** (-exponent)) / volume)


def separation_moments(inclusions: InclusionSet, alpha: float, beta: float | None = None) -> SeparationReport:
    """Nearest-neighbor separations and the moments of ``nu^-alpha`` (and ``mu^-beta``)."""
    if inclusions.count < 2:
        raise InsufficientInclusionsError(inclusions.count)
    beta = alpha if beta is None else beta
    gaps = pairwise_gaps(inclusions)
    rho = gaps.min(axis=1)
    rho = np.where(rho < shapes.TANGENT_TOL, 0.0, rho)
    diameters = np.array([shapes.diameter(i) for i in inclusions.inclusions])
    nu = np.minimum(rho / diameters, 1.0)
    capsules = [isinstance(i, Capsule) for i in inclusions.inclusions]
    mu = None
    if all(capsules):
        widths = np.array([i.width for i in inclusions.inclusions])
        mu = np.minimum(rho / widths, 1.0)

    volume = inclusions.period**inclusions.dim
    per_inclusion = [
        InclusionSeparation(
            id=inc.id,
            rho=float(rho[k]),
            diameter=float(diameters[k]),
            nu=float(nu[k]),
            mu=None if mu is None else float(mu[k]),
        )
        for k, inc in enumerate(inclusions.inclusions)
    ]
    infinite = bool(np.any(nu <= 0))
    report = SeparationReport(
        alpha=alpha,
        beta=beta if mu is not None else None,
        cell_volume=volume,
        inclusions=per_inclusion,
        moment_nu=_moment(nu, alpha, volume),
        moment_mu=None if mu is None else _moment(mu, beta, volume),
        moment_gap=None if mu is None else _moment(rho, beta, volume),
        infinite=infinite,
    )
    report.admissible_p = admissible_exponent(report)
    if infinite:
        logger.warning("Touching inclusions: separation moment is infinite")
    return report


def admissible_exponent(report: SeparationReport) -> float | None:
    """Largest p for which the moment condition yields an extension bound.

    ``2a/(1+a)`` for the finite moment of order ``a`` (``alpha`` on nu, ``beta`` on
    mu for capsules); ``None`` if no moment is finite.
    """
    candidates = []
    if np.isfinite(report.moment_nu):
        candidates.append(2 * report.alpha / (1 + report.alpha))
    if report.moment_mu is not None and np.isfinite(report.moment_mu):
        candidates.append(2 * report.beta / (1 + report.beta))
    return max(candidates) if candidates else None


def convex_threshold(dim: int) -> float:
    """Exponent ``2(d+1)/(d+3)`` available for strictly convex inclusions."""
    return 2 * (dim + 1) / (dim + 3)
