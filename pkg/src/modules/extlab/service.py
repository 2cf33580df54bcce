"""Harmonic extension into the inclusions and extension-constant surveys."""

import logging

import numpy as np

from src.infrastructure.parallel import parallel_map
from src.models import BoundaryCondition, CoeffField, Disc, GridFunction, Grid, InclusionSet, IndicatorGrid
from src.modules.geometry.schemas import RasterRule
from src.modules.geometry.service import (
    admissible_exponent,
    convex_threshold,
    pairwise_gaps,
    rasterize,
    separation_moments,
    tile,
)
from src.modules.geometry.unionfind import label_components
from src.modules.linalg.service import pcg
from src.modules.mesh.exceptions import GridMismatchError
from src.modules.mesh.service import assemble_operator, discrete_gradient, face_mask, gradient_magnitude
from .exceptions import InvalidExponentError, NoComplementError
from .schemas import StabilityRow, SurveyReport, SurveyRow

logger = logging.getLogger(__name__)

FOURIER_MAX_MODE = 2
TRIAL_FIELDS = 16
NECK_PAIRS = 4
NECK_SCALES = (2, 4, 8, 16)


def random_fourier_fields(grid: Grid, samples: int = TRIAL_FIELDS, seed: int = 0) -> list[GridFunction]:
    """Periodic fields ``sum_k (a_k cos + b_k sin)(2 pi k.x / L)`` over ``0 < |k|_inf <= 2``.

    Coefficients are standard normal divided by ``|k|``.
    """
    rng = np.random.default_rng(seed)
    centers = grid.centers()
    modes = [
        np.asarray(k)
        for k in np.ndindex(*(2 * FOURIER_MAX_MODE + 1,) * grid.dim)
        if any(np.asarray(k) != FOURIER_MAX_MODE)
    ]
    bc = BoundaryCondition.periodic()
    fields = []
    for _ in range(samples):
        values = np.zeros(grid.shape)
        for raw in modes:
            k = raw - FOURIER_MAX_MODE
            phase = 2 * np.pi * sum(ki * x for ki, x in zip(k, centers)) / grid.length
            a, b = rng.standard_normal(2) / np.linalg.norm(k)
            values += a * np.cos(phase) + b * np.sin(phase)
        fields.append(GridFunction(values, grid, bc))
    return fields


def neck_fields(
    inclusions: InclusionSet,
    grid: Grid,
    pairs: int = NECK_PAIRS,
    scales: tuple[int, ...] = NECK_SCALES,
) -> list[GridFunction]:
    """Fields concentrated at the narrowest gaps between discs.

    Around the contact point ``q`` of each of the ``pairs`` closest disc pairs the
    field is ``sin(theta) * min(1, T / |x - q|)``, ``theta`` being the angle to the
    line of centers, so the two sides of the neck carry opposite signs. ``T`` runs
    over ``scales`` grid steps and a linear cutoff clears the field beyond a quarter
    period. Only disc sets in two dimensions have necks; anything else gives no field.
    """
    discs = [inc for inc in inclusions.inclusions if isinstance(inc, Disc)]
    if grid.dim != 2 or len(discs) < 2 or len(discs) != inclusions.count:
        return []
    period = inclusions.period
    gaps = pairwise_gaps(inclusions)
    first, second = np.triu_indices(len(discs), k=1)
    order = np.argsort(gaps[first, second], kind="stable")[:pairs]
    points = np.stack(grid.centers(), axis=-1)
    cutoff = 0.25 * period
    bc = BoundaryCondition.periodic()
    fields = []
    for k in order:
        a, b = discs[first[k]], discs[second[k]]
        ca, cb = np.asarray(a.center, dtype=float), np.asarray(b.center, dtype=float)
        axis = cb - ca
        axis -= period * np.round(axis / period)
        distance = float(np.linalg.norm(axis))
        normal = axis / distance
        q = ca + (a.radius + 0.5 * max(float(gaps[first[k], second[k]]), 0.0)) * normal
        offset = points - q
        offset -= period * np.round(offset / period)
        rho = np.maximum(np.linalg.norm(offset, axis=-1), 0.5 * grid.h)
        tangent = np.array([-normal[1], normal[0]])
        sine = offset @ tangent / rho
        taper = np.clip(2.0 - 2.0 * rho / cutoff, 0.0, 1.0)
        for steps in scales:
            scale = steps * grid.h
            values = sine * np.minimum(1.0, scale / rho) * taper
            fields.append(GridFunction(values - values.mean(), grid, bc))
    logger.debug(f"{len(fields)} neck fields at {len(order)} disc pairs")
    return fields


def harmonic_extension(u: GridFunction, chi: IndicatorGrid, threads: int | None = None) -> GridFunction:
    """Replace ``u`` inside every inclusion component by the discrete harmonic function with the complement values as data.

    Each component of F is an independent Dirichlet problem ``A_FF w = -A_FC u_C``;
    complement values are returned unchanged.
    """
    grid = chi.grid
    if not grid.periodic:
        raise GridMismatchError("Harmonic extension is defined on the periodic cell")
    if u.grid.shape != grid.shape:
        raise GridMismatchError("Field and indicator live on different grids")
    if chi.is_empty:
        return GridFunction(u.values.copy(), grid, BoundaryCondition.periodic())
    if chi.cells.all():
        raise NoComplementError()

    laplacian = assemble_operator(CoeffField(a=1.0, m=0.0, grid=grid), BoundaryCondition.periodic()).matrix
    flat = u.values.reshape(-1)
    outside = np.flatnonzero(chi.complement.reshape(-1))
    labels, count = label_components(chi.cells, periodic=True)
    labels = labels.reshape(-1)

    def solve(component: int) -> tuple[np.ndarray, np.ndarray]:
        idx = np.flatnonzero(labels == component)
        rows = laplacian[idx]
        rhs = -(rows[:, outside] @ flat[outside])
        w, _ = pcg(rows[:, idx].tocsr(), rhs)
        return idx, w

    extended = flat.copy()
    for idx, w in parallel_map(solve, range(1, count + 1), threads):
        extended[idx] = w
    logger.debug(f"Harmonic extension over {count} inclusion components")
    return GridFunction(extended.reshape(grid.shape), grid, BoundaryCondition.periodic())


def dirichlet_energy(u: GridFunction, mask: np.ndarray | None = None) -> float:
    """``h^d sum |grad u|^2`` over faces with both cells in ``mask``."""
    grad = discrete_gradient(u).components
    masks = face_mask(u.grid, mask)
    return u.grid.cell_volume * float(sum(np.sum(g[m] ** 2) for g, m in zip(grad, masks)))


def extension_ratio(u: GridFunction, extended: GridFunction, chi: IndicatorGrid, p: float) -> float:
    """``||grad Pu||_p / ||grad u||_L2(complement)`` with volume-averaged norms."""
    if not 1.0 <= p <= 2.0:
        raise InvalidExponentError(p)
    grid = chi.grid
    volume = grid.volume
    denominator = np.sqrt(dirichlet_energy(u, chi.complement) / volume)
    if denominator == 0.0:
        return 0.0
    magnitude = gradient_magnitude(grid, discrete_gradient(extended))
    numerator = float(np.mean(magnitude**p)) ** (1.0 / p)
    return numerator / denominator


def extension_constants(
    chi: IndicatorGrid,
    exponents: list[float],
    samples: int = TRIAL_FIELDS,
    seed: int = 0,
    threads: int | None = None,
    inclusions: InclusionSet | None = None,
) -> dict[float, float]:
    """Largest extension ratio over the trial fields, per exponent.

    With ``inclusions`` given the Fourier fields are joined by the neck fields of the set.
    """
    fields = random_fourier_fields(chi.grid, samples, seed)
    if inclusions is not None:
        fields += neck_fields(inclusions, chi.grid)
    best = {float(p): 0.0 for p in exponents}
    for u in fields:
        extended = harmonic_extension(u, chi, threads)
        for p in best:
            best[p] = max(best[p], extension_ratio(u, extended, chi, p))
    return best


def extension_constant_survey(
    families: dict[str, InclusionSet],
    exponents: list[float],
    resolutions: list[int],
    samples: int = TRIAL_FIELDS,
    seed: int = 0,
    rule: RasterRule = RasterRule.CENTER,
    threads: int | None = None,
) -> SurveyReport:
    """Table ``C(p, family, n)`` of observed extension constants."""
    for p in exponents:
        if not 1.0 <= p <= 2.0:
            raise InvalidExponentError(p)
    rows, admissible = [], {}
    dim = 2
    for family, inclusions in families.items():
        dim = inclusions.dim
        admissible[family] = (
            admissible_exponent(separation_moments(inclusions, alpha=1.0)) if inclusions.count >= 2 else None
        )
        for n in resolutions:
            chi = rasterize(inclusions, n, rule, check=False)
            constants = extension_constants(chi, exponents, samples, seed, threads, inclusions)
            for p, constant in constants.items():
                rows.append(SurveyRow(family=family, p=p, n=n, constant=constant))
            logger.info(f"{family} n={n}: " + ", ".join(f"C({p:.3g})={c:.4f}" for p, c in constants.items()))
    return SurveyReport(
        rows=rows,
        samples=samples,
        seed=seed,
        convex_threshold=convex_threshold(dim),
        admissible_p=admissible,
    )


def eps_stability(
    inclusions: InclusionSet,
    eps_list: list[float],
    cells_per_period: int,
    p: float = 2.0,
    samples: int = TRIAL_FIELDS,
    seed: int = 0,
    threads: int | None = None,
) -> list[StabilityRow]:
    """Extension constant on a torus of ``1/eps`` cell periods per axis, i.e. the unit torus at scale eps."""
    rows = []
    for eps in sorted(eps_list, reverse=True):
        copies = int(round(1.0 / eps))
        tiled = tile(inclusions, copies)
        chi = rasterize(tiled, cells_per_period * copies, check=False)
        constant = extension_constants(chi, [p], samples, seed, threads, tiled)[float(p)]
        rows.append(StabilityRow(eps=eps, n=chi.grid.n, constant=constant))
    return rows
