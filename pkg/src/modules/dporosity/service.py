"""The eps-problem, the auxiliary inclusion problem, the homogenized and the coupled systems."""

import logging
import warnings

import numpy as np
import scipy.sparse as sp

from src.config import settings
from src.models import (
    BoundaryCondition,
    CoeffField,
    Grid,
    GridFunction,
    InclusionSet,
    IndicatorGrid,
)
from src.modules.cell.exceptions import IncommensurateGridError, InvariantViolationError
from src.modules.geometry import shapes
from src.modules.geometry.schemas import RasterRule
from src.modules.geometry.service import check_disjoint, rasterize_labels
from src.modules.linalg.service import cg_solve, pcg
from src.modules.mesh.schemas import NormKind
from src.modules.mesh.service import (
    assemble_operator,
    assemble_tensor_operator,
    energy_identity_residual,
    norm,
    rhs_from_field,
)
from .exceptions import InvalidHomogenizedDataError, UnderResolutionWarning, UnderResolvedError
from .schemas import CoupledSolution, Domain, EpsProblem

logger = logging.getLogger(__name__)

BOUND_SLACK = 1e-8


def as_grid_function(f, grid: Grid) -> GridFunction:
    """Accept a constant, a callable of the center coordinates or a `GridFunction`."""
    bc = BoundaryCondition.natural(grid)
    if isinstance(f, GridFunction):
        if f.grid.shape != grid.shape:
            raise IncommensurateGridError(f"Field on a {f.grid.shape} grid, expected {grid.shape}")
        return GridFunction(f.values, grid, bc)
    if callable(f):
        return GridFunction.from_callable(grid, f, bc)
    return GridFunction(np.full(grid.shape, float(f)), grid, bc)


def cells_per_period(eps: float, period: float, domain: Domain, resolution: int) -> int:
    """Grid cells per scaled period ``eps * period``; must be an integer."""
    h = domain.side / resolution
    cells = eps * period / h
    rounded = int(round(cells))
    if rounded < 1 or abs(cells - rounded) > 1e-9 * max(cells, 1.0):
        raise IncommensurateGridError(
            f"eps*period = {eps * period:g} is not a multiple of the grid step {h:g} (resolution {resolution})"
        )
    return rounded


def _check_resolution(geometry: InclusionSet, cells: int) -> None:
    if not geometry.inclusions:
        return
    smallest = min(shapes.diameter(i) for i in geometry.inclusions) * cells / geometry.period
    if smallest < settings.HARD_MIN_CELLS_PER_DIAMETER:
        logger.error(f"Inclusions under-resolved: {smallest:.2f} cells per diameter")
        raise UnderResolvedError(smallest, settings.HARD_MIN_CELLS_PER_DIAMETER)
    if smallest < settings.MIN_CELLS_PER_DIAMETER:
        message = f"Smallest inclusion spans only {smallest:.2f} cells"
        logger.warning(message)
        warnings.warn(message, UnderResolutionWarning, stacklevel=3)


def build_eps_problem(
    geometry: InclusionSet,
    domain: Domain,
    eps: float,
    f,
    resolution: int,
    rule: RasterRule = RasterRule.CENTER,
) -> EpsProblem:
    """Scale the cell geometry by ``eps`` and rasterize it on ``resolution**d`` cells of D.

    On a box only the scaled inclusion copies lying strictly inside D are kept;
    copies touching or crossing the boundary are dropped. On a torus every copy is
    kept and D must hold an integer number of scaled periods.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    check_disjoint(geometry)
    dim = geometry.dim
    cells = cells_per_period(eps, geometry.period, domain, resolution)
    _check_resolution(geometry, cells)
    copies = -(-resolution // cells)
    if domain.periodic and copies * cells != resolution:
        raise IncommensurateGridError(f"Torus of {resolution} cells is not a whole number of {cells}-cell periods")

    if geometry.inclusions:
        labels, offsets, _ = rasterize_labels(geometry, cells, rule)
    else:
        labels = np.full((cells,) * dim, -1, dtype=np.int64)
        offsets = np.zeros((cells,) * dim + (dim,), dtype=np.int64)
    crop = (slice(0, resolution),) * dim
    tiled_labels = np.tile(labels, (copies,) * dim)[crop]
    tiled_offsets = np.tile(offsets, (copies,) * dim + (1,))[crop]
    inside = tiled_labels >= 0

    count = 0
    if inside.any():
        period = geometry.period
        tile_index = np.stack(np.indices(tiled_labels.shape), axis=-1) // cells
        anchors = tile_index - tiled_offsets
        if domain.periodic:
            anchors = np.mod(anchors, copies)
        keys = np.concatenate([tiled_labels[..., None], anchors], axis=-1)[inside]
        unique_keys, inverse = np.unique(keys, axis=0, return_inverse=True)
        if domain.periodic:
            keep_copy = np.ones(len(unique_keys), dtype=bool)
        else:
            by_id = {inc.id: shapes.bounds(inc) for inc in geometry.inclusions}
            lows = np.array([by_id[int(k[0])][0] for k in unique_keys])
            highs = np.array([by_id[int(k[0])][1] for k in unique_keys])
            shift = unique_keys[:, 1:] * period
            lo = eps * (lows + shift)
            hi = eps * (highs + shift)
            slack = 1e-12 * domain.side
            keep_copy = np.all(lo > slack, axis=1) & np.all(hi < domain.side - slack, axis=1)
        kept = np.zeros(tiled_labels.shape, dtype=bool)
        kept[inside] = keep_copy[inverse.reshape(-1)]
        inside = kept
        count = int(keep_copy.sum())

    grid = Grid(resolution, dim, domain.side, periodic=domain.periodic)
    chi_eps = IndicatorGrid(cells=inside, grid=grid, provenance=f"eps={eps}:{geometry.model.value}:seed={geometry.seed}")
    logger.info(
        f"eps-problem eps={eps}: {resolution}^{dim} cells, {cells} per period, {count} inclusions in D, "
        f"fraction {chi_eps.volume_fraction:.4f}"
    )
    return EpsProblem(
        domain=domain,
        geometry=geometry,
        eps=eps,
        f=as_grid_function(f, grid),
        chi_eps=chi_eps,
        cell_resolution=cells,
        inclusion_count=count,
    )


def solve_eps_problem(p: EpsProblem, tol: float | None = None) -> GridFunction:
    """Solve the eps-problem and check the energy identity and the L2 bound."""
    op = p.operator
    u = cg_solve(op, rhs_from_field(op, p.f), tol=tol, bc=BoundaryCondition.natural(p.grid))
    residual = energy_identity_residual(op, u, p.f)
    if residual > settings.IDENTITY_TOL:
        logger.error(f"Energy identity defect {residual:.3e} at eps={p.eps}")
        raise InvariantViolationError("energy identity defect", residual, settings.IDENTITY_TOL)
    u_norm, f_norm = norm(u), norm(p.f)
    if u_norm > f_norm * (1 + BOUND_SLACK) + np.finfo(float).tiny:
        raise InvariantViolationError("||u_eps|| - ||f||", u_norm - f_norm, 0.0)
    logger.info(f"u_eps solved at eps={p.eps}: ||u||={u_norm:.6f}, energy defect {residual:.2e}")
    return u


def solve_auxiliary(p: EpsProblem, rhs_field, tol: float | None = None) -> GridFunction:
    """``v - eps^2 lap v = g`` in F_eps(D), zero on the inclusion boundaries and outside."""
    grid = p.grid
    g = as_grid_function(rhs_field, grid)
    bc = BoundaryCondition.masked(p.chi_eps.cells)
    if p.chi_eps.is_empty:
        return GridFunction.zeros(grid, bc)
    op = assemble_operator(CoeffField(a=p.eps**2, m=1.0, grid=grid), bc)
    v = cg_solve(op, rhs_from_field(op, g), tol=tol, bc=bc)
    bound = float(np.abs(g.values).max())
    peak = float(np.abs(v.values).max())
    if peak > bound * (1 + BOUND_SLACK) + 1e-14:
        raise InvariantViolationError("maximum principle excess of v_eps", peak - bound, 0.0)
    return v


def _check_cell_data(a_bar: np.ndarray, mean_v: float) -> None:
    if not mean_v < 1:
        raise InvalidHomogenizedDataError(f"E[v] = {mean_v} must be below 1")
    if np.any(np.linalg.eigvalsh(0.5 * (a_bar + a_bar.T)) <= 0):
        raise InvalidHomogenizedDataError("a_bar is not positive definite")


def solve_homogenized(hd, f, domain: Domain, resolution: int, tol: float | None = None) -> GridFunction:
    """``(1 - E[v]) u - div(a_bar grad u) = (1 - E[v]) f`` on D."""
    a_bar = np.atleast_2d(np.asarray(hd.a_bar, dtype=float))
    mean_v = float(hd.mean_v)
    _check_cell_data(a_bar, mean_v)
    dim = a_bar.shape[0]
    grid = Grid(resolution, dim, domain.side, periodic=domain.periodic)
    bc = BoundaryCondition.natural(grid)
    f = as_grid_function(f, grid)
    op = assemble_tensor_operator(grid, a_bar, 1.0 - mean_v, bc)
    u_bar = cg_solve(op, rhs_from_field(op, f.scaled(1.0 - mean_v)), tol=tol, bc=bc)
    logger.info(f"Homogenized problem solved on {resolution}^{dim} cells")
    return u_bar


def manufactured_rhs(hd, u_bar: GridFunction) -> GridFunction:
    """Right-hand side whose discrete homogenized solution is exactly ``u_bar``."""
    a_bar = np.atleast_2d(np.asarray(hd.a_bar, dtype=float))
    mean_v = float(hd.mean_v)
    _check_cell_data(a_bar, mean_v)
    grid = u_bar.grid
    stiffness = assemble_tensor_operator(grid, a_bar, 0.0, BoundaryCondition.natural(grid))
    correction = stiffness.scatter(stiffness.matvec(stiffness.gather(u_bar.values)))
    return GridFunction(u_bar.values + correction / (grid.cell_volume * (1.0 - mean_v)), grid, u_bar.bc)


def solve_coupled_two_scale(hd, p: EpsProblem, tol: float | None = None) -> CoupledSolution:
    """Monolithic solve of ``u + w - div(a_bar grad u) = f`` and ``u + w - eps^2 lap w = f`` in eps F.

    Unknowns are ``u_bar`` on every cell and ``w`` on the F cells (zero on their
    boundary). The block matrix is symmetric positive definite.
    """
    if not p.domain.periodic:
        raise IncommensurateGridError("The coupled two-scale system is posed on a torus")
    a_bar = np.atleast_2d(np.asarray(hd.a_bar, dtype=float))
    _check_cell_data(a_bar, float(hd.mean_v))
    grid = p.grid
    vol = grid.cell_volume
    mask = p.chi_eps.cells
    stiffness = assemble_tensor_operator(grid, a_bar, 0.0, BoundaryCondition.periodic())
    inclusion_op = assemble_operator(CoeffField(a=p.eps**2, m=0.0, grid=grid), BoundaryCondition.masked(mask))
    inside = inclusion_op.dofs
    select = sp.csr_array(
        (np.ones(inside.size), (np.arange(inside.size), inside)), shape=(inside.size, grid.size)
    )
    block = sp.block_array(
        [
            [vol * sp.eye_array(grid.size) + stiffness.matrix, vol * select.T],
            [vol * select, vol * sp.eye_array(inside.size) + inclusion_op.matrix],
        ],
        format="csr",
    )
    diff = block - block.T
    asymmetry = float(abs(diff).max()) if diff.nnz else 0.0
    if asymmetry > 1e-12 * float(abs(block).max()):
        raise InvariantViolationError("coupled block asymmetry", asymmetry, 0.0)

    f_dofs = p.f.flat * vol
    rhs = np.concatenate([f_dofs, f_dofs[inside]])
    x, info = pcg(block, rhs, tol=tol)
    u_bar = GridFunction(x[: grid.size].reshape(grid.shape), grid, BoundaryCondition.periodic())
    w = GridFunction(inclusion_op.scatter(x[grid.size :]), grid, BoundaryCondition.masked(mask))

    f_norm = norm(p.f)
    total = norm(u_bar, kind=NormKind.H1) + norm(w)
    ratio = total / f_norm if f_norm > 0 else 0.0
    if ratio > settings.BOUND_CONSTANT:
        raise InvariantViolationError("(||u_bar||_H1 + ||w||) / ||f||", ratio, settings.BOUND_CONSTANT)
    logger.info(f"Coupled system at eps={p.eps}: {block.shape[0]} unknowns, {info.iterations} CG iterations")
    return CoupledSolution(u_bar=u_bar, w=w, asymmetry=asymmetry, bound_ratio=ratio)
