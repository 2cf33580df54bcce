"""Two-scale expansions and the error diagnostics of the eps-problem."""

import logging
from itertools import product

import numpy as np
from scipy import ndimage

from src.models import BoundaryCondition, FaceField, Grid, GridFunction, face_shape
from src.modules.cell.exceptions import IncommensurateGridError
from src.modules.cell.schemas import CorrectorSet
from src.modules.mesh.schemas import NormKind
from src.modules.mesh.service import centered_gradient, discrete_gradient, face_mask, norm, to_faces
from .exceptions import InsufficientSweepError
from .schemas import CoupledErrors, CoupledSolution, EpsProblem, ErrorRow, Expansion, InsideDiagnostics, WeakLimitReport, WeakLimitRow

logger = logging.getLogger(__name__)

BATTERY_MAX_MODE = 4
TINY_DEFECT = 1e-12


def sine_battery(grid: Grid, max_mode: int = BATTERY_MAX_MODE) -> list[tuple[str, GridFunction]]:
    """Constant plus tensor sine modes ``k_1..k_d <= max_mode``.

    On a box the sines vanish on the boundary; on a torus they are periodic.
    """
    factor = np.pi / grid.length if not grid.periodic else 2 * np.pi / grid.length
    centers = grid.centers()
    bc = BoundaryCondition.natural(grid)
    battery = [("const", GridFunction(np.ones(grid.shape), grid, bc))]
    for modes in product(range(1, max_mode + 1), repeat=grid.dim):
        values = np.ones(grid.shape)
        for k, x in zip(modes, centers):
            values = values * np.sin(k * factor * x)
        battery.append(("sin" + "_".join(str(k) for k in modes), GridFunction(values, grid, bc)))
    return battery


def mollify(u: GridFunction, width: float | None) -> GridFunction:
    """Convolution of ``u`` (extended by zero off a box) with a compact bump of radius ``width``."""
    grid = u.grid
    if not width or width < grid.h:
        return u
    radius = width / grid.h
    reach = int(np.floor(radius))
    offsets = np.arange(-reach, reach + 1, dtype=float)
    rho2 = sum(g**2 for g in np.meshgrid(*([offsets] * grid.dim), indexing="ij")) / radius**2
    kernel = np.where(rho2 < 1.0, np.exp(-1.0 / np.where(rho2 < 1.0, 1.0 - rho2, 1.0)), 0.0)
    kernel /= kernel.sum()
    mode = "wrap" if grid.periodic else "constant"
    smooth = ndimage.convolve(u.values, kernel, mode=mode, cval=0.0)
    return GridFunction(smooth, grid, BoundaryCondition.natural(grid))


def _check_commensurate(p: EpsProblem, field_grid: Grid) -> None:
    if field_grid.n != p.cell_resolution or field_grid.dim != p.grid.dim:
        raise IncommensurateGridError(
            f"Cell fields on {field_grid.n} cells per period, the eps-grid needs {p.cell_resolution}"
        )


def _cell_index(shape: tuple[int, ...], period_cells: int) -> tuple[np.ndarray, ...]:
    return tuple(np.indices(shape) % period_cells)


def _face_gradients(u: GridFunction) -> list[list[np.ndarray]]:
    """``grads[k][i]``: ``d_i u`` on the faces of axis ``k``."""
    grid = u.grid
    exact = discrete_gradient(u).components
    cellwise = centered_gradient(u)
    return [
        [exact[k] if i == k else to_faces(grid, cellwise[i], k) for i in range(grid.dim)]
        for k in range(grid.dim)
    ]


def _expansion_gradient(u_s: GridFunction, correctors: CorrectorSet, m: int) -> FaceField:
    grid = u_s.grid
    grads = _face_gradients(u_s)
    comps = []
    for k in range(grid.dim):
        idx = _cell_index(face_shape(grid, k), m)
        comp = grads[k][k].copy()
        for i in correctors.directions:
            comp += correctors.grad_phi[i].components[k][idx] * grads[k][i]
        comps.append(comp)
    return FaceField(tuple(comps), grid)


def _outside_ansatz(u_s: GridFunction, correctors: CorrectorSet, p: EpsProblem) -> np.ndarray:
    idx = _cell_index(p.grid.shape, p.cell_resolution)
    slopes = centered_gradient(u_s)
    values = u_s.values.copy()
    for i in correctors.directions:
        values += p.eps * correctors.phi[i].values[idx] * slopes[i]
    return values


def two_scale_expansion(
    u_bar: GridFunction,
    correctors: CorrectorSet,
    v_cell: GridFunction,
    p: EpsProblem,
    smoothing: float | None = None,
) -> Expansion:
    """Outside ansatz ``u_s + eps phi_i(x/eps) d_i u_s`` and inside ansatz ``u_s + v(x/eps)(f - u_s)``.

    ``u_s`` is ``u_bar`` mollified at width ``smoothing`` when given. The gradient
    of the outside ansatz is ``(e_i + grad phi_i)(x/eps) d_i u_s`` on faces.
    """
    _check_commensurate(p, correctors.grid)
    _check_commensurate(p, v_cell.grid)
    if u_bar.grid.shape != p.grid.shape:
        raise IncommensurateGridError("u_bar and the eps-problem live on different grids")
    grid = p.grid
    bc = BoundaryCondition.natural(grid)
    u_s = mollify(u_bar, smoothing)
    idx = _cell_index(grid.shape, p.cell_resolution)
    v_scaled = np.where(p.chi_eps.cells, v_cell.values[idx], 0.0)
    inside = u_s.values + v_scaled * (p.f.values - u_s.values)
    return Expansion(
        u_smooth=u_s,
        outside=GridFunction(_outside_ansatz(u_s, correctors, p), grid, bc),
        inside=GridFunction(inside, grid, bc),
        gradient=_expansion_gradient(u_s, correctors, p.cell_resolution),
    )


def _masked_face_l2(grid: Grid, comps, masks) -> float:
    return float(np.sqrt(grid.cell_volume * sum(np.sum(c[m] ** 2) for c, m in zip(comps, masks))))


def error_report(u_eps: GridFunction, expansion: Expansion, p: EpsProblem, energy_residual: float = 0.0) -> ErrorRow:
    """H1 error outside F, L2 error of the inside ansatz and the gradient defect."""
    grid = p.grid
    outside = p.outside
    err_h1 = norm(u_eps - expansion.outside, mask=outside, kind=NormKind.H1)
    err_l2 = norm(u_eps - expansion.inside)
    grad_u = discrete_gradient(u_eps).components
    defect = [g - e for g, e in zip(grad_u, expansion.gradient.components)]
    grad_defect = _masked_face_l2(grid, defect, face_mask(grid, outside))
    logger.info(f"eps={p.eps}: H1 outside {err_h1:.4e}, L2 inside {err_l2:.4e}, grad defect {grad_defect:.4e}")
    return ErrorRow(
        eps=p.eps,
        resolution=grid.n,
        err_h1_outside=err_h1,
        err_l2_inside=err_l2,
        grad_defect=grad_defect,
        energy_residual=energy_residual,
    )


def _pairing(psi: GridFunction, values: np.ndarray) -> float:
    return float(psi.grid.cell_volume * np.sum(psi.values * values))


def inside_error_diagnostics(
    u_eps: GridFunction,
    u_bar: GridFunction,
    v_eps: GridFunction,
    p: EpsProblem,
    battery: list[tuple[str, GridFunction]] | None = None,
) -> InsideDiagnostics:
    """Compare ``||u_eps - u_bar - v_eps||`` on F_eps(D) with ``||u_eps - u_bar||`` outside plus ``eps ||f||``.

    The negative-norm defect is the largest battery pairing of ``u_eps - u_bar - v_eps``
    normalized by the H1 norm of the test function.
    """
    battery = battery or sine_battery(p.grid)
    defect = u_eps.values - u_bar.values - v_eps.values
    left = 0.0
    if not p.chi_eps.is_empty:
        left = norm(GridFunction(defect, p.grid, u_eps.bc), mask=p.chi_eps.cells)
    right = norm(u_eps - u_bar, mask=p.outside) + p.eps * norm(p.f)
    hminus1 = max(abs(_pairing(psi, defect)) / norm(psi, kind=NormKind.H1) for _, psi in battery)
    return InsideDiagnostics(
        left=left,
        right=right,
        ratio=left / right if right > 0 else 0.0,
        hminus1_defect=hminus1,
    )


def coupled_error_report(
    u_eps: GridFunction,
    coupled: CoupledSolution,
    correctors: CorrectorSet,
    p: EpsProblem,
) -> CoupledErrors:
    """Errors of the coupled two-scale approximation: H1 outside F with correctors, and L2 of ``u - u_bar - w``."""
    _check_commensurate(p, correctors.grid)
    outside = GridFunction(_outside_ansatz(coupled.u_bar, correctors, p), p.grid, u_eps.bc)
    return CoupledErrors(
        h1_outside=norm(u_eps - outside, mask=p.outside, kind=NormKind.H1),
        l2=norm(u_eps - coupled.u_bar - coupled.w),
    )


def _flux_defect(
    psi: GridFunction,
    u_eps: GridFunction,
    outside: np.ndarray,
    u_bar: GridFunction,
    a_bar: np.ndarray,
) -> float:
    grid = psi.grid
    masks = face_mask(grid, outside)
    grad_eps = discrete_gradient(u_eps).components
    grads_bar = _face_gradients(u_bar)
    total = 0.0
    for j in range(grid.dim):
        psi_face = to_faces(grid, psi.values, j)
        flux_bar = sum(a_bar[j, i] * grads_bar[j][i] for i in range(grid.dim))
        pairing = grid.cell_volume * float(np.sum(psi_face * (np.where(masks[j], grad_eps[j], 0.0) - flux_bar)))
        total += pairing**2
    return float(np.sqrt(total))


def verify_weak_limit(
    solutions: list[tuple[float, GridFunction, np.ndarray]],
    u_bar: GridFunction,
    mean_v: float,
    a_bar: np.ndarray,
    f: GridFunction,
    battery: list[tuple[str, GridFunction]] | None = None,
) -> WeakLimitReport:
    """Pair ``u_eps - u_bar - E[v](f - u_bar)`` and ``(1 - chi) grad u_eps - a_bar grad u_bar`` with a test battery.

    ``solutions`` holds ``(eps, u_eps, outside_mask)``; every field lives on the
    grid of ``u_bar``. A test function is flagged decreasing when both its
    defects at the smallest eps fall below those at the largest eps.
    """
    if len(solutions) < 3:
        raise InsufficientSweepError(len(solutions))
    battery = battery or sine_battery(u_bar.grid)
    a_bar = np.atleast_2d(np.asarray(a_bar, dtype=float))
    ordered = sorted(solutions, key=lambda s: -s[0])
    target = u_bar.values + mean_v * (f.values - u_bar.values)
    rows = []
    decreasing = {}
    for name, psi in battery:
        per_eps = []
        for eps, u_eps, outside in ordered:
            scalar = abs(_pairing(psi, u_eps.values - target))
            flux = _flux_defect(psi, u_eps, outside, u_bar, a_bar)
            per_eps.append((scalar, flux))
            rows.append(WeakLimitRow(test_function=name, eps=eps, scalar_defect=scalar, flux_defect=flux))
        first, last = per_eps[0], per_eps[-1]
        decreasing[name] = all(b < a or b <= TINY_DEFECT for a, b in zip(first, last))
    if not all(decreasing.values()):
        logger.warning(f"Weak-limit defects not decreasing for {[k for k, v in decreasing.items() if not v]}")
    return WeakLimitReport(rows=rows, decreasing=decreasing)
