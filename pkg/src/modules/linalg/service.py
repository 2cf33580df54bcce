"""Linear solvers: Jacobi-preconditioned CG, mean-zero CG and a dense LU oracle."""

import logging
import warnings
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from src.config import settings
from src.models import BoundaryCondition, GridFunction, SparseOperator
from .exceptions import (
    CompatibilityWarning,
    NonConvergenceError,
    SingularSystemError,
    SystemTooLargeError,
)
from .schemas import SolveInfo

logger = logging.getLogger(__name__)

DENSE_LIMIT = 4096
COMPATIBILITY_TOL = 1e-8


def _remove_mean(x: np.ndarray) -> np.ndarray:
    # second pass removes the rounding left by the first
    x = x - x.mean()
    return x - x.mean()


def pcg(
    matrix: sp.sparray,
    b: np.ndarray,
    tol: float | None = None,
    max_iter: int | None = None,
    x0: np.ndarray | None = None,
    mean_zero: bool = False,
    callback: Callable[[np.ndarray], None] | None = None,
) -> tuple[np.ndarray, SolveInfo]:
    """Solve ``matrix @ x = b`` by conjugate gradients with a Jacobi preconditioner.

    With ``mean_zero`` the iteration runs on the complement of the constant vector
    (the kernel of a pure-Neumann or periodic operator). Reductions use numpy's fixed
    summation order, so the iteration is deterministic.
    """
    tol = settings.CG_TOL if tol is None else tol
    max_iter = settings.CG_MAX_ITER if max_iter is None else max_iter
    b = np.asarray(b, dtype=float)
    project = _remove_mean if mean_zero else (lambda v: v)

    diag = matrix.diagonal()
    inv_diag = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 1.0)

    x = np.zeros_like(b) if x0 is None else project(np.array(x0, dtype=float))
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        # Zero right-hand side; the solution is zero
        return np.zeros_like(b), SolveInfo(iterations=0, relative_residual=0.0, residual_history=[0.0])

    r = b - matrix @ x
    z = project(inv_diag * r)
    p = z.copy()
    rz = float(r @ z)
    history = [float(np.linalg.norm(r)) / b_norm]

    counter = 0
    while history[-1] > tol:
        if counter >= max_iter:
            logger.error(f"CG stalled at relative residual {history[-1]:.3e}")
            raise NonConvergenceError(counter, history)
        counter += 1
        Ap = matrix @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            logger.error("CG met a non-positive curvature direction")
            raise NonConvergenceError(counter, history)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if mean_zero:
            r = project(r)
        history.append(float(np.linalg.norm(r)) / b_norm)
        if callback is not None:
            callback(x)
        z = project(inv_diag * r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new

    if mean_zero:
        x = _remove_mean(x)
    true_residual = float(np.linalg.norm(b - matrix @ x)) / b_norm
    logger.debug(f"CG converged in {counter} iterations, true relative residual {true_residual:.3e}")
    return x, SolveInfo(iterations=counter, relative_residual=true_residual, residual_history=history)


def _rhs_vector(op: SparseOperator, rhs) -> np.ndarray:
    values = rhs.values if isinstance(rhs, GridFunction) else np.asarray(rhs, dtype=float)
    if values.size == op.dofs.size:
        return values.reshape(-1)
    return op.gather(values)


def cg_solve(
    op: SparseOperator,
    rhs,
    tol: float | None = None,
    max_iter: int | None = None,
    bc: BoundaryCondition | None = None,
) -> GridFunction:
    """Solve ``op u = rhs`` on the active cells and return ``u`` on the full grid."""
    b = _rhs_vector(op, rhs)
    x, info = pcg(op.matrix, b, tol=tol, max_iter=max_iter)
    logger.info(f"cg_solve: {op.dofs.size} unknowns, {info.iterations} iterations")
    return GridFunction(op.scatter(x), op.grid, bc or BoundaryCondition.natural(op.grid))


def mean_zero_solve(
    op: SparseOperator,
    rhs,
    tol: float | None = None,
    max_iter: int | None = None,
    bc: BoundaryCondition | None = None,
) -> tuple[GridFunction, SolveInfo]:
    """Solve a singular system whose kernel is the constant vector on ``op.dofs``.

    The right-hand side is projected to mean zero first; a defect above
    ``1e-8 * ||rhs||`` triggers a `CompatibilityWarning`. The returned field has mean
    zero over the active cells.
    """
    b = _rhs_vector(op, rhs)
    rhs_mean = float(b.mean()) if b.size else 0.0
    b_norm = float(np.linalg.norm(b))
    if b.size and abs(rhs_mean) * np.sqrt(b.size) > COMPATIBILITY_TOL * max(b_norm, np.finfo(float).tiny):
        message = f"Right-hand side mean {rhs_mean:.3e} removed before the mean-zero solve"
        logger.warning(message)
        warnings.warn(message, CompatibilityWarning, stacklevel=2)
    b = _remove_mean(b) if b.size else b
    x, info = pcg(op.matrix, b, tol=tol, max_iter=max_iter, mean_zero=True)
    info.rhs_mean = rhs_mean
    return GridFunction(op.scatter(x), op.grid, bc or BoundaryCondition.natural(op.grid)), info


def dense_solve(A, rhs) -> np.ndarray:
    """Gaussian elimination with partial pivoting (test oracle)."""
    A = np.asarray(A.toarray() if sp.issparse(A) else A, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = A.shape[0]
    if n > DENSE_LIMIT:
        raise SystemTooLargeError(n, DENSE_LIMIT)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    pivots = np.abs(np.diag(lu))
    scale = max(float(np.abs(lu).max()), np.finfo(float).tiny)
    if pivots.min() <= n * np.finfo(float).eps * scale:
        raise SingularSystemError(float(pivots.min()))
    return scipy.linalg.lu_solve((lu, piv), rhs)
