"""Structured-grid finite-volume calculus.

Cell-centered finite volumes with harmonic face averaging: the face between cells L
and R carries the transmissibility ``2 a_L a_R / (a_L + a_R) * h^(d-2)`` (0 if either
side is 0); a Dirichlet ghost sits half a cell away and uses the cell's own ``a``.
Assembled systems read ``A u = f h^d`` with ``A = diag(m h^d) + sum_f T_f (e_L - e_R)(e_L - e_R)^T``.
"""

import logging
import warnings

import numpy as np
import scipy.sparse as sp

from src.models import (
    GHOST,
    BoundaryCondition,
    BoundaryKind,
    CoeffField,
    FaceField,
    FaceSet,
    Grid,
    GridFunction,
    IndicatorGrid,
    SparseOperator,
    face_shape,
)
from .exceptions import EmptyMaskWarning, GridMismatchError, InvalidCoefficientError
from .schemas import NormKind

logger = logging.getLogger(__name__)


def coefficient_field(
    chi: IndicatorGrid,
    outside: float,
    inside: float,
    mass: float | np.ndarray = 1.0,
) -> CoeffField:
    """Two-level conductivity from an indicator: ``outside`` on the complement, ``inside`` on F."""
    if outside <= 0 or inside < 0:
        raise InvalidCoefficientError(f"Invalid conductivities outside={outside}, inside={inside}")
    if np.any(np.asarray(mass) < 0):
        raise InvalidCoefficientError("Mass must be nonnegative")
    a = np.where(chi.cells, inside, outside).astype(float)
    return CoeffField(a=a, m=np.broadcast_to(np.asarray(mass, dtype=float), chi.grid.shape), grid=chi.grid)


def _harmonic(a_left: np.ndarray, a_right: np.ndarray) -> np.ndarray:
    total = a_left + a_right
    positive = (a_left > 0) & (a_right > 0)
    return np.where(positive, 2.0 * a_left * a_right / np.where(positive, total, 1.0), 0.0)


def build_faces(grid: Grid, a, bc: BoundaryCondition) -> FaceSet:
    """Face list for conductivity ``a`` (one array, or one array per axis)."""
    if bc.kind == BoundaryKind.PERIODIC and not grid.periodic:
        raise GridMismatchError("Periodic boundary condition on a box grid")
    if bc.kind == BoundaryKind.DIRICHLET_ZERO and grid.periodic:
        raise GridMismatchError("DirichletZero boundary condition on a periodic grid")
    per_axis = list(a) if isinstance(a, (list, tuple)) else [a] * grid.dim
    idx = np.arange(grid.size).reshape(grid.shape)

    lefts, rights, axes, a_lefts, a_rights = [], [], [], [], []

    def add(left, right, a_left, a_right, axis):
        lefts.append(left.reshape(-1))
        rights.append(right.reshape(-1))
        a_lefts.append(a_left.reshape(-1))
        a_rights.append(a_right.reshape(-1))
        axes.append(np.full(left.size, axis))

    for axis in range(grid.dim):
        a_axis = np.broadcast_to(np.asarray(per_axis[axis], dtype=float), grid.shape)
        if grid.periodic:
            add(idx, np.roll(idx, -1, axis), a_axis, np.roll(a_axis, -1, axis), axis)
            continue
        lo, hi, first, last = axis_slices(grid, axis)
        add(idx[lo], idx[hi], a_axis[lo], a_axis[hi], axis)
        add(np.full(idx[first].shape, GHOST), idx[first], a_axis[first], a_axis[first], axis)
        add(idx[last], np.full(idx[last].shape, GHOST), a_axis[last], a_axis[last], axis)

    left = np.concatenate(lefts)
    right = np.concatenate(rights)
    a_left = np.concatenate(a_lefts)
    a_right = np.concatenate(a_rights)
    axis = np.concatenate(axes)

    if bc.kind == BoundaryKind.MASKED_DIRICHLET:
        mask = bc.mask.reshape(-1)
        in_left = (left != GHOST) & mask[np.maximum(left, 0)]
        in_right = (right != GHOST) & mask[np.maximum(right, 0)]
        # a face leaving the mask becomes a half-cell Dirichlet face
        left = np.where(in_right & ~in_left, GHOST, left)
        right = np.where(in_left & ~in_right, GHOST, right)
        keep = in_left | in_right
        left, right, axis = left[keep], right[keep], axis[keep]
        a_left, a_right = a_left[keep], a_right[keep]

    ghost = (left == GHOST) | (right == GHOST)
    own = np.where(left == GHOST, a_right, a_left)
    cond = np.where(ghost, own, _harmonic(a_left, a_right))
    dist = np.where(ghost, 0.5, 1.0)
    return FaceSet(left=left, right=right, axis=axis, trans=cond * grid.h ** (grid.dim - 2) / dist, dist=dist)


def axis_slices(grid: Grid, axis: int):
    """Index tuples for interior-face left cells, right cells, and the two boundary layers."""

    def along(s):
        out = [slice(None)] * grid.dim
        out[axis] = s
        return tuple(out)

    return (
        along(slice(0, grid.n - 1)),
        along(slice(1, grid.n)),
        along(slice(0, 1)),
        along(slice(grid.n - 1, grid.n)),
    )


def assemble_operator(
    coeff: CoeffField,
    bc: BoundaryCondition,
    active: np.ndarray | None = None,
) -> SparseOperator:
    """Assemble ``u -> m u - div(a grad u)`` (times ``h^d``) as a symmetric CSR matrix.

    Unknowns are the mask cells under ``MaskedDirichlet``, the ``active`` cells when
    given (faces touching inactive cells are dropped, i.e. zero flux), and every cell
    otherwise.
    """
    grid = coeff.grid
    faces = build_faces(grid, coeff.a, bc)
    return _assemble(grid, faces, coeff.m, bc, active)


def _assemble(
    grid: Grid,
    faces: FaceSet,
    mass: np.ndarray,
    bc: BoundaryCondition,
    active: np.ndarray | None = None,
) -> SparseOperator:
    mask = np.ones(grid.size, dtype=bool)
    if bc.kind == BoundaryKind.MASKED_DIRICHLET:
        mask &= bc.mask.reshape(-1)
    if active is not None:
        if np.asarray(active).shape != grid.shape:
            raise GridMismatchError("Active-cell mask does not match the grid")
        mask &= np.asarray(active, dtype=bool).reshape(-1)
        touching = ((faces.left != GHOST) & ~mask[np.maximum(faces.left, 0)]) | (
            (faces.right != GHOST) & ~mask[np.maximum(faces.right, 0)]
        )
        faces = FaceSet(
            left=faces.left[~touching],
            right=faces.right[~touching],
            axis=faces.axis[~touching],
            trans=faces.trans[~touching],
            dist=faces.dist[~touching],
        )

    dofs = np.flatnonzero(mask)
    dof_of = np.full(grid.size, -1)
    dof_of[dofs] = np.arange(dofs.size)

    left = np.where(faces.left == GHOST, -1, dof_of[np.maximum(faces.left, 0)])
    right = np.where(faces.right == GHOST, -1, dof_of[np.maximum(faces.right, 0)])
    both = (left >= 0) & (right >= 0)
    only_left = (left >= 0) & (right < 0)
    only_right = (right >= 0) & (left < 0)

    m = np.asarray(mass, dtype=float).reshape(-1)[dofs] * grid.cell_volume
    rows = [np.arange(dofs.size), left[both], right[both], left[both], right[both], left[only_left], right[only_right]]
    cols = [np.arange(dofs.size), right[both], left[both], left[both], right[both], left[only_left], right[only_right]]
    t = faces.trans
    vals = [m, -t[both], -t[both], t[both], t[both], t[only_left], t[only_right]]
    matrix = sp.coo_array(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dofs.size, dofs.size)
    ).tocsr()
    matrix.sum_duplicates()
    logger.debug(f"Assembled {dofs.size} unknowns, {faces.count} faces, {matrix.nnz} nonzeros")
    return SparseOperator(
        matrix=matrix,
        grid=grid,
        dofs=dofs,
        faces=faces,
        mass=np.asarray(mass, dtype=float).reshape(-1).copy(),
    )


def assemble_tensor_operator(
    grid: Grid,
    tensor: np.ndarray,
    mass: float,
    bc: BoundaryCondition,
) -> SparseOperator:
    """Constant-coefficient ``m u - div(A grad u)`` with a symmetric ``d x d`` tensor ``A``.

    Diagonal entries give axis transmissibilities; off-diagonal entries use the
    symmetric four-point cross stencil (values beyond a box boundary read as 0).
    """
    tensor = np.asarray(tensor, dtype=float)
    faces = build_faces(grid, [np.full(grid.shape, tensor[k, k]) for k in range(grid.dim)], bc)
    op = _assemble(grid, faces, np.full(grid.shape, mass), bc)
    if grid.dim < 2 or np.allclose(tensor - np.diag(np.diag(tensor)), 0.0, atol=0.0):
        return op

    idx = np.arange(grid.size).reshape(grid.shape)
    coords = np.indices(grid.shape).reshape(grid.dim, -1)
    rows, cols, vals = [], [], []
    scale = grid.h ** (grid.dim - 2) / 2.0
    for j in range(grid.dim):
        for k in range(j + 1, grid.dim):
            for sj, sk in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                shifted = coords.copy()
                shifted[j] += sj
                shifted[k] += sk
                if grid.periodic:
                    shifted %= grid.n
                    valid = np.ones(grid.size, dtype=bool)
                else:
                    valid = np.all((shifted >= 0) & (shifted < grid.n), axis=0)
                target = idx[tuple(np.clip(shifted, 0, grid.n - 1))]
                rows.append(np.arange(grid.size)[valid])
                cols.append(target[valid])
                vals.append(np.full(valid.sum(), -sj * sk * tensor[j, k] * scale))
    cross = sp.coo_array(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=op.shape
    ).tocsr()
    return SparseOperator(
        matrix=(op.matrix + cross).tocsr(), grid=grid, dofs=op.dofs, faces=op.faces, mass=op.mass
    )


def rhs_from_field(op: SparseOperator, f) -> np.ndarray:
    """``f h^d`` on the operator's unknowns."""
    values = f.values if isinstance(f, GridFunction) else np.broadcast_to(np.asarray(f, dtype=float), op.grid.shape)
    return op.gather(values) * op.grid.cell_volume


def face_source_rhs(op: SparseOperator, xi: np.ndarray) -> np.ndarray:
    """Right-hand side of ``-div(a (xi + grad phi)) = 0`` moved to the DOFs.

    Minimizing ``sum_f T_f (dphi_f + s_f h xi_axis)^2`` gives ``A phi = -B^T (T s h xi)``.
    """
    faces = op.faces
    weight = faces.trans * faces.dist * op.grid.h * np.asarray(xi, dtype=float)[faces.axis]
    dof_of = np.full(op.grid.size, -1)
    dof_of[op.dofs] = np.arange(op.dofs.size)
    b = np.zeros(op.dofs.size)
    left = np.where(faces.left == GHOST, -1, dof_of[np.maximum(faces.left, 0)])
    right = np.where(faces.right == GHOST, -1, dof_of[np.maximum(faces.right, 0)])
    np.add.at(b, left[left >= 0], weight[left >= 0])
    np.add.at(b, right[right >= 0], -weight[right >= 0])
    return b


def face_flux(op: SparseOperator, values: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Per-face ``a h^d (xi + grad u)`` integrated over the face's dual volume."""
    faces = op.faces
    shift = faces.dist * op.grid.h * np.asarray(xi, dtype=float)[faces.axis]
    return faces.trans * faces.dist * op.grid.h * (faces.differences(values) + shift)


def energy(op: SparseOperator, values: np.ndarray, xi: np.ndarray | None = None) -> float:
    """``h^d sum m u^2 + sum_f T_f (du_f + s_f h xi)^2``."""
    faces = op.faces
    flat = np.asarray(values, dtype=float).reshape(-1)
    du = faces.differences(flat)
    if xi is not None:
        du = du + faces.dist * op.grid.h * np.asarray(xi, dtype=float)[faces.axis]
    mass_part = float(np.sum(op.mass[op.dofs] * flat[op.dofs] ** 2)) * op.grid.cell_volume
    return mass_part + float(np.sum(faces.trans * du**2))


def energy_identity_residual(op: SparseOperator, u: GridFunction, f) -> float:
    """Relative defect of ``h^d sum f u = h^d sum m u^2 + sum_f T_f (du)^2``."""
    work = float(rhs_from_field(op, f) @ op.gather(u.values))
    stored = energy(op, u.values)
    if work == 0.0:
        return abs(stored)
    return abs(work - stored) / abs(work)


def discrete_gradient(u: GridFunction) -> FaceField:
    """Face differences ``(u_R - u_L) / h``."""
    grid = u.grid
    comps = []
    for axis in range(grid.dim):
        if grid.periodic:
            comps.append((np.roll(u.values, -1, axis) - u.values) / grid.h)
        else:
            comps.append(np.diff(u.values, axis=axis) / grid.h)
    return FaceField(tuple(comps), grid)


def discrete_divergence(field: FaceField) -> GridFunction:
    """Negative adjoint of `discrete_gradient` (summation by parts is exact)."""
    grid = field.grid
    div = np.zeros(grid.shape)
    for axis, comp in enumerate(field.components):
        if grid.periodic:
            div += (comp - np.roll(comp, 1, axis)) / grid.h
        else:
            pad = [(0, 0)] * grid.dim
            pad[axis] = (1, 1)
            padded = np.pad(comp, pad)
            div += np.diff(padded, axis=axis) / grid.h
    return GridFunction(div, grid, BoundaryCondition.natural(grid))


def face_mask(grid: Grid, mask: np.ndarray | None) -> tuple[np.ndarray, ...]:
    """Per axis, the faces whose two cells both lie in ``mask``."""
    if mask is None:
        return tuple(np.ones(face_shape(grid, k), dtype=bool) for k in range(grid.dim))
    mask = np.asarray(mask, dtype=bool)
    out = []
    for axis in range(grid.dim):
        if grid.periodic:
            out.append(mask & np.roll(mask, -1, axis))
        else:
            lo, hi, _, _ = axis_slices(grid, axis)
            out.append(mask[lo] & mask[hi])
    return tuple(out)


def to_faces(grid: Grid, cell_values: np.ndarray, axis: int) -> np.ndarray:
    """Average a cell field onto the faces of ``axis``."""
    if grid.periodic:
        return 0.5 * (cell_values + np.roll(cell_values, -1, axis))
    lo, hi, _, _ = axis_slices(grid, axis)
    return 0.5 * (cell_values[lo] + cell_values[hi])


def centered_gradient(u: GridFunction) -> tuple[np.ndarray, ...]:
    """Cell-wise gradient: centered differences, one-sided at box boundaries."""
    grid = u.grid
    if grid.periodic:
        return tuple(
            (np.roll(u.values, -1, k) - np.roll(u.values, 1, k)) / (2 * grid.h) for k in range(grid.dim)
        )
    if grid.n < 2:
        return tuple(np.zeros(grid.shape) for _ in range(grid.dim))
    grads = np.gradient(u.values, grid.h, edge_order=1)
    return (grads,) if grid.dim == 1 else tuple(grads)


def norm(
    u: GridFunction,
    mask: np.ndarray | None = None,
    kind: NormKind = NormKind.L2,
    p: float = 2.0,
) -> float:
    """Cell-sum quadrature norms, optionally restricted to a cell mask.

    The H1 seminorm only counts faces whose two cells lie in the mask. An empty mask
    returns 0 and emits `EmptyMaskWarning`.
    """
    kind = NormKind(kind)
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    grid = u.grid
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != grid.shape:
            raise GridMismatchError("Norm mask does not match the grid")
        if not mask.any():
            warnings.warn("Norm over an empty mask", EmptyMaskWarning, stacklevel=2)
            return 0.0
    cells = u.values if mask is None else u.values[mask]

    def l2_squared() -> float:
        return grid.cell_volume * float(np.sum(cells**2))

    def semi_squared() -> float:
        grad = discrete_gradient(u)
        fmask = face_mask(grid, mask)
        return grid.cell_volume * float(sum(np.sum(g[m] ** 2) for g, m in zip(grad.components, fmask)))

    if kind == NormKind.L2:
        return float(np.sqrt(l2_squared()))
    if kind == NormKind.H1_SEMINORM:
        return float(np.sqrt(semi_squared()))
    if kind == NormKind.H1:
        return float(np.sqrt(l2_squared() + semi_squared()))
    return float((grid.cell_volume * np.sum(np.abs(cells) ** p)) ** (1.0 / p))


def gradient_magnitude(grid: Grid, grad: FaceField) -> np.ndarray:
    """Cell-wise ``|grad u|`` from face values (mean of squares over the two faces per axis)."""
    total = np.zeros(grid.shape)
    for axis, comp in enumerate(grad.components):
        sq = comp**2
        if grid.periodic:
            total += 0.5 * (sq + np.roll(sq, 1, axis))
        else:
            pad = [(0, 0)] * grid.dim
            pad[axis] = (1, 1)
            padded = np.pad(sq, pad)
            lo = [slice(None)] * grid.dim
            hi = [slice(None)] * grid.dim
            lo[axis], hi[axis] = slice(0, grid.n), slice(1, grid.n + 1)
            total += 0.5 * (padded[tuple(lo)] + padded[tuple(hi)])
    return np.sqrt(total)
