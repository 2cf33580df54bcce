"""Periodic cell problems: resonance, correctors, homogenized matrix, flux and inclusion correctors."""

import logging

import numpy as np

from src.config import settings
from src.infrastructure.parallel import parallel_map
from src.models import (
    BoundaryCondition,
    CoeffField,
    FaceField,
    Grid,
    GridFunction,
    IndicatorGrid,
    SparseOperator,
)
from src.modules.geometry.service import check_connectivity
from src.modules.linalg.service import cg_solve, mean_zero_solve
from src.modules.mesh.exceptions import GridMismatchError
from src.modules.mesh.service import (
    assemble_operator,
    coefficient_field,
    discrete_gradient,
    energy,
    face_flux,
    face_mask,
    face_source_rhs,
    rhs_from_field,
)
from .exceptions import (
    ConsistencyError,
    IncommensurateGridError,
    InvariantViolationError,
    MissingDirectionError,
)
from .schemas import CorrectorMoments, CorrectorSet, CorrectorVariant, HomogenizedData

logger = logging.getLogger(__name__)

IDENTITY_TOL = 1e-6
BOUND_SLACK = 1e-10


def _require_periodic(grid: Grid) -> None:
    if not grid.periodic:
        raise GridMismatchError("Cell problems need a periodic grid")


def _unit(dim: int, i: int) -> np.ndarray:
    return np.eye(dim)[i]


def _directions(grid: Grid, directions) -> list[int]:
    if directions is None:
        return list(range(grid.dim))
    if isinstance(directions, int):
        directions = [directions]
    for i in directions:
        if not 0 <= i < grid.dim:
            raise ValueError(f"Direction {i} out of range for dimension {grid.dim}")
    return list(directions)


def forward_difference(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(values, -1, axis) - values) / h


def backward_difference(values: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (values - np.roll(values, 1, axis)) / h


def _l2(grid: Grid, values) -> float:
    return float(np.sqrt(grid.cell_volume * sum(np.sum(np.asarray(v) ** 2) for v in values)))


# ---------------------------------------------------------------------------
# Resonance
# ---------------------------------------------------------------------------


def solve_resonant_cell(chi: IndicatorGrid) -> tuple[GridFunction, float]:
    """Solve ``v - lap v = 1`` in F with ``v = 0`` on its boundary; ``v`` vanishes outside F."""
    grid = chi.grid
    bc = BoundaryCondition.masked(chi.cells)
    if chi.is_empty:
        return GridFunction.zeros(grid, bc), 0.0
    op = assemble_operator(CoeffField(a=1.0, m=1.0, grid=grid), bc)
    v = cg_solve(op, rhs_from_field(op, 1.0), bc=bc)
    mean_v = v.mean()
    logger.info(f"Resonant cell problem: {op.dofs.size} unknowns, E[v] = {mean_v:.6f}")
    return v, mean_v


# ---------------------------------------------------------------------------
# Correctors
# ---------------------------------------------------------------------------


def _solve_directions(op: SparseOperator, dirs: list[int], solve, threads: int | None):
    def one(i: int):
        return solve(face_source_rhs(op, _unit(op.grid.dim, i)))

    return dict(zip(dirs, parallel_map(one, dirs, threads)))


def _corrector_set(variant, op, phis, eps=None, mask=None) -> CorrectorSet:
    grid = op.grid
    grads, energies = {}, {}
    fmask = face_mask(grid, mask) if mask is not None else None
    for i, phi in phis.items():
        grad = discrete_gradient(phi)
        if fmask is not None:
            grad = FaceField(tuple(g * m for g, m in zip(grad.components, fmask)), grid)
        grads[i] = grad
        energies[i] = energy(op, phi.values, _unit(grid.dim, i)) / grid.volume
    return CorrectorSet(variant=variant, phi=phis, grad_phi=grads, operator=op, energy=energies, eps=eps)


def solve_corrector_soft(chi: IndicatorGrid, directions=None, threads: int | None = None) -> CorrectorSet:
    """Corrector of the perforated cell: unknowns on the complement only, zero flux into F.

    Each ``phi_i`` is normalized to mean zero over the complement cells.
    """
    grid = chi.grid
    _require_periodic(grid)
    if not chi.is_empty:
        check_connectivity(chi)
    dirs = _directions(grid, directions)
    coeff = coefficient_field(chi, outside=1.0, inside=0.0, mass=0.0)
    op = assemble_operator(coeff, BoundaryCondition.periodic(), active=chi.complement)
    logger.info(f"Soft correctors: {op.dofs.size} complement unknowns, directions {dirs}")

    def solve(b):
        phi, info = mean_zero_solve(op, b)
        logger.debug(f"Soft corrector converged in {info.iterations} iterations")
        return phi

    phis = _solve_directions(op, dirs, solve, threads)
    return _corrector_set(CorrectorVariant.SOFT_RESTRICTED, op, phis, mask=chi.complement)


def solve_corrector_massive(
    chi: IndicatorGrid,
    eps: float,
    directions=None,
    threads: int | None = None,
) -> CorrectorSet:
    """Regularized corrector ``eps^2 phi - div((1 - chi + eps^2 chi)(e_i + grad phi)) = 0``."""
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    grid = chi.grid
    _require_periodic(grid)
    dirs = _directions(grid, directions)
    coeff = coefficient_field(chi, outside=1.0, inside=eps**2, mass=eps**2)
    op = assemble_operator(coeff, BoundaryCondition.periodic())
    logger.info(f"Massive correctors: eps={eps}, {op.dofs.size} unknowns")
    phis = _solve_directions(op, dirs, lambda b: cg_solve(op, b), threads)
    return _corrector_set(CorrectorVariant.MASSIVE, op, phis, eps=eps)


def scaled_cell_copies(period: float, eps: float, domain: float) -> int:
    """Number of cells of side ``period`` along one side of ``domain / eps``."""
    copies = domain / (eps * period)
    rounded = int(round(copies))
    if rounded < 1 or abs(copies - rounded) > 1e-9 * max(copies, 1.0):
        raise IncommensurateGridError(f"domain/eps = {domain / eps:g} is not a multiple of the period {period:g}")
    return rounded


def solve_corrector_dirichlet(
    chi: IndicatorGrid,
    eps: float,
    directions=None,
    domain: float = 1.0,
    threads: int | None = None,
) -> CorrectorSet:
    """Massive corrector on the box ``D / eps`` with zero Dirichlet data.

    The box is tiled by copies of the cell indicator at the cell's resolution.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    _require_periodic(chi.grid)
    copies = scaled_cell_copies(chi.period, eps, domain)
    grid = Grid(chi.resolution * copies, chi.dim, chi.period * copies, periodic=False)
    tiled = IndicatorGrid(cells=np.tile(chi.cells, (copies,) * chi.dim), grid=grid, provenance=chi.provenance)
    dirs = _directions(grid, directions)
    coeff = coefficient_field(tiled, outside=1.0, inside=eps**2, mass=eps**2)
    bc = BoundaryCondition.dirichlet()
    op = assemble_operator(coeff, bc)
    logger.info(f"Dirichlet correctors: eps={eps}, {copies}^{chi.dim} cells, {op.dofs.size} unknowns")
    phis = _solve_directions(op, dirs, lambda b: cg_solve(op, b, bc=bc), threads)
    return _corrector_set(CorrectorVariant.DIRICHLET_DOMAIN, op, phis, eps=eps)


def corrector_defect(soft: CorrectorSet, approx: CorrectorSet, chi: IndicatorGrid) -> float:
    """``||1_outside (grad phi_approx - grad phi)||_L2`` summed over the common directions."""
    grid = soft.grid
    if approx.grid.shape != grid.shape:
        raise GridMismatchError("Correctors live on different grids")
    masks = face_mask(grid, chi.complement)
    total = 0.0
    for i in sorted(set(soft.directions) & set(approx.directions)):
        for g_approx, g_soft, m in zip(approx.grad_phi[i].components, soft.grad_phi[i].components, masks):
            total += float(np.sum((g_approx - g_soft)[m] ** 2))
    return float(np.sqrt(grid.cell_volume * total))


# ---------------------------------------------------------------------------
# Homogenized matrix
# ---------------------------------------------------------------------------


def homogenized_matrix(corr: CorrectorSet, chi: IndicatorGrid) -> tuple[np.ndarray, np.ndarray, float]:
    """Homogenized matrix by the energy form and the flux form of the cell formula.

    Returns ``(a_bar, a_bar_energy, consistency_error)`` where ``a_bar`` is the
    symmetrized flux form. Raises `ConsistencyError` when the two forms differ by
    more than ``CONSISTENCY_TOL`` relative.
    """
    grid = corr.grid
    if corr.variant != CorrectorVariant.SOFT_RESTRICTED:
        raise ValueError(f"homogenized_matrix needs soft correctors, got {corr.variant.value}")
    if corr.directions != list(range(grid.dim)):
        raise MissingDirectionError(corr.directions, grid.dim)
    op = corr.operator
    faces = op.faces
    shifted = {
        i: faces.differences(corr.phi[i].values) + faces.dist * grid.h * (faces.axis == i)
        for i in range(grid.dim)
    }
    a_energy = np.empty((grid.dim, grid.dim))
    a_flux = np.empty((grid.dim, grid.dim))
    for i in range(grid.dim):
        flux = face_flux(op, corr.phi[i].values, _unit(grid.dim, i))
        for j in range(grid.dim):
            a_energy[i, j] = float(np.sum(faces.trans * shifted[i] * shifted[j])) / grid.volume
            a_flux[j, i] = float(np.sum(flux[faces.axis == j])) / grid.volume
    a_bar = 0.5 * (a_flux + a_flux.T)
    scale = max(float(np.abs(a_energy).max()), 1.0 - chi.volume_fraction, np.finfo(float).tiny)
    error = float(np.abs(a_energy - a_bar).max()) / scale
    if error > settings.CONSISTENCY_TOL:
        logger.error(f"Energy and flux forms of a_bar disagree by {error:.3e}")
        raise ConsistencyError(error, settings.CONSISTENCY_TOL)
    logger.info(f"a_bar = {a_bar.tolist()} (consistency {error:.2e})")
    return a_bar, a_energy, error


def cell_fluxes(corr: CorrectorSet, chi: IndicatorGrid, a_bar: np.ndarray) -> dict[int, FaceField]:
    """Face fluxes ``q_i = 1_outside (e_i + grad phi_i) - a_bar e_i`` with their mean removed."""
    grid = corr.grid
    fmask = face_mask(grid, chi.complement)
    out = {}
    for i in corr.directions:
        grad = discrete_gradient(corr.phi[i])
        comps = []
        for k in range(grid.dim):
            q = np.where(fmask[k], (k == i) + grad.components[k], 0.0) - a_bar[k, i]
            defect = float(q.mean())
            if abs(defect) > 1e-8:
                logger.warning(f"Flux q_{i} component {k} has mean {defect:.3e}; removed")
            comps.append(q - defect)
        out[i] = FaceField(tuple(comps), grid)
    return out


def _periodic_laplacian(grid: Grid) -> SparseOperator:
    return assemble_operator(CoeffField(a=1.0, m=0.0, grid=grid), BoundaryCondition.periodic())


def solve_flux_corrector(
    q_i: FaceField,
    i: int,
    threads: int | None = None,
) -> tuple[dict[tuple[int, int], np.ndarray], float]:
    """Skew-symmetric flux corrector ``sigma_i`` with ``sum_k d_k sigma_ijk = (q_i)_j``.

    Solves ``-lap sigma_ijk = d_j (q_i)_k - d_k (q_i)_j`` for ``j < k`` on the edge
    grid and stores ``sigma_ikj = -sigma_ijk``. Returns the fields and the relative
    L2 residual of the divergence identity.
    """
    grid = q_i.grid
    _require_periodic(grid)
    h = grid.h
    q = q_i.components
    lap = _periodic_laplacian(grid)
    pairs = [(j, k) for j in range(grid.dim) for k in range(j + 1, grid.dim)]

    def one(pair):
        j, k = pair
        rhs = forward_difference(q[k], j, h) - forward_difference(q[j], k, h)
        sol, _ = mean_zero_solve(lap, rhs.reshape(-1) * grid.cell_volume)
        return sol.values

    sigma: dict[tuple[int, int], np.ndarray] = {}
    for (j, k), values in zip(pairs, parallel_map(one, pairs, threads)):
        sigma[(j, k)] = values
        sigma[(k, j)] = -values

    defects = []
    for j in range(grid.dim):
        recon = np.zeros(grid.shape)
        for k in range(grid.dim):
            if k != j:
                recon += backward_difference(sigma[(j, k)], k, h)
        defects.append(recon - q[j])
    q_norm = _l2(grid, q)
    # in one dimension the identity reads q_i = 0, so the residual is absolute
    scale = q_norm if grid.dim > 1 and q_norm > 0 else 1.0
    residual = _l2(grid, defects) / scale
    if residual > IDENTITY_TOL:
        logger.error(f"Flux corrector identity residual {residual:.3e} for direction {i}")
        raise InvariantViolationError(f"flux corrector identity residual (direction {i})", residual, IDENTITY_TOL)
    logger.debug(f"Flux corrector sigma_{i}: identity residual {residual:.3e}")
    return sigma, residual


def solve_inclusion_corrector(v: GridFunction, threads: int | None = None) -> tuple[dict[int, np.ndarray], float]:
    """Inclusion corrector with ``lap theta_i = d_i v``; ``theta_i`` lives on the ``i``-faces.

    Returns the fields and the L2 residual of ``div theta = v - mean(v)``.
    """
    grid = v.grid
    _require_periodic(grid)
    h = grid.h
    lap = _periodic_laplacian(grid)

    def one(i):
        rhs = -forward_difference(v.values, i, h)
        sol, _ = mean_zero_solve(lap, rhs.reshape(-1) * grid.cell_volume)
        return sol.values

    dirs = list(range(grid.dim))
    theta = dict(zip(dirs, parallel_map(one, dirs, threads)))
    div = sum(backward_difference(theta[i], i, h) for i in dirs)
    residual = _l2(grid, [div - (v.values - v.values.mean())])
    limit = IDENTITY_TOL * max(1.0, _l2(grid, [v.values]))
    if residual > limit:
        logger.error(f"Inclusion corrector identity residual {residual:.3e}")
        raise InvariantViolationError("inclusion corrector identity residual", residual, limit)
    return theta, residual


def corrector_moment_report(
    phi: dict[int, GridFunction],
    sigma: dict[int, dict[tuple[int, int], np.ndarray]],
    theta: dict[int, np.ndarray],
) -> CorrectorMoments:
    """Spatial mean and maximum of ``sum |phi_i|^2``, ``sum |sigma_ijk|^2`` and ``sum |theta_i|^2``."""

    def pointwise(arrays) -> np.ndarray | float:
        arrays = list(arrays)
        return sum(np.asarray(a) ** 2 for a in arrays) if arrays else 0.0

    phi_sq = pointwise(p.values for p in phi.values())
    sigma_sq = pointwise(s for per_i in sigma.values() for s in per_i.values())
    theta_sq = pointwise(theta.values())
    return CorrectorMoments(
        phi_mean_square=float(np.mean(phi_sq)),
        sigma_mean_square=float(np.mean(sigma_sq)),
        theta_mean_square=float(np.mean(theta_sq)),
        phi_max_square=float(np.max(phi_sq)),
        sigma_max_square=float(np.max(sigma_sq)),
        theta_max_square=float(np.max(theta_sq)),
    )


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


def _check_bounds(a_bar: np.ndarray, v: GridFunction, mean_v: float, vol_frac: float) -> None:
    if np.abs(a_bar - a_bar.T).max() > BOUND_SLACK:
        raise InvariantViolationError("asymmetry of a_bar", float(np.abs(a_bar - a_bar.T).max()), BOUND_SLACK)
    top = float(np.linalg.eigvalsh(a_bar).max())
    if top > (1.0 - vol_frac) + BOUND_SLACK:
        raise InvariantViolationError("largest eigenvalue of a_bar", top, 1.0 - vol_frac)
    low, high = float(v.values.min()), float(v.values.max())
    if low < -BOUND_SLACK or high > 1.0 + BOUND_SLACK:
        raise InvariantViolationError("range of v outside [0, 1]", max(-low, high - 1.0), BOUND_SLACK)
    if vol_frac > 0 and not mean_v < vol_frac:
        raise InvariantViolationError("E[v] - vol_frac", mean_v - vol_frac, 0.0)


def compute_homogenized_data(
    chi: IndicatorGrid,
    threads: int | None = None,
    with_flux: bool = True,
) -> HomogenizedData:
    """All cell quantities: correctors, a_bar, v, and optionally q, sigma and theta."""
    grid = chi.grid
    _require_periodic(grid)
    logger.info(f"Cell problems on n={grid.n}, d={grid.dim}, volume fraction {chi.volume_fraction:.5f}")
    corr = solve_corrector_soft(chi, threads=threads)
    a_bar, a_energy, error = homogenized_matrix(corr, chi)
    v, mean_v = solve_resonant_cell(chi)
    _check_bounds(a_bar, v, mean_v, chi.volume_fraction)

    residuals = {"consistency": error}
    q, sigma, theta = {}, {}, {}
    if with_flux:
        q = cell_fluxes(corr, chi, a_bar)
        for i in range(grid.dim):
            sigma[i], residuals[f"sigma_{i}"] = solve_flux_corrector(q[i], i, threads)
        theta, residuals["theta"] = solve_inclusion_corrector(v, threads)
    return HomogenizedData(
        a_bar=a_bar,
        a_bar_energy=a_energy,
        consistency_error=error,
        mean_v=mean_v,
        vol_frac=chi.volume_fraction,
        v=v,
        correctors=corr,
        q=q,
        sigma=sigma,
        theta=theta,
        residuals=residuals,
    )
