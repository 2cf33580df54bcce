"""Convergence sweeps over eps: per-eps solves, error rows, log-log slope fits."""

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from src.infrastructure.parallel import parallel_map
from src.models import Grid, InclusionSet
from src.modules.cell.schemas import HomogenizedData
from src.modules.geometry.schemas import RasterRule
from src.modules.mesh.service import energy_identity_residual
from .diagnostics import coupled_error_report, error_report, inside_error_diagnostics, two_scale_expansion
from src.modules.cell.exceptions import IncommensurateGridError
from .exceptions import InsufficientSweepError, SweepMismatchError
from .schemas import Domain, ErrorRow, SlopeFit, SweepReport
from .service import (
    as_grid_function,
    build_eps_problem,
    manufactured_rhs,
    solve_auxiliary,
    solve_coupled_two_scale,
    solve_eps_problem,
    solve_homogenized,
)

logger = logging.getLogger(__name__)

OUTLIER_FACTOR = 3.0
FIT_FLOOR = 1e-9
ERROR_COLUMNS = (
    "err_h1_outside",
    "err_l2_inside",
    "grad_defect",
    "inside_left",
    "inside_right",
    "inside_ratio",
    "hminus1_defect",
    "coupled_h1_outside",
    "coupled_l2",
    "energy_residual",
)


def compact_bump(side: float, radius_fraction: float = 0.3):
    """Smooth bump supported in the ball of radius ``radius_fraction * side`` around the center of D."""
    radius = radius_fraction * side

    def bump(*x):
        r2 = sum((xi - 0.5 * side) ** 2 for xi in x) / radius**2
        inside = r2 < 1.0
        return np.where(inside, np.exp(1.0 - 1.0 / np.where(inside, 1.0 - r2, 1.0)), 0.0)

    return bump


def source_for(kind: str, domain: Domain):
    """``(f, target)`` for a named source: ``one`` and ``sine`` give ``f``, ``bump`` a manufactured target."""
    side = domain.side
    if kind == "one":
        return 1.0, None
    if kind == "sine":
        factor = (2.0 if domain.periodic else 1.0) * np.pi / side
        return (lambda *x: np.prod([np.sin(factor * xi) for xi in x], axis=0)), None
    if kind == "bump":
        return None, compact_bump(side)
    raise ValueError(f"Unknown source {kind!r}")


def fit_slope(eps, errors) -> SlopeFit:
    """Least-squares line through ``(log eps, log error)``.

    The point at the largest eps is dropped when its residual exceeds three times
    the RMS residual of the others and at least three points remain. Fewer than
    three positive errors leave the slope undefined.
    """
    eps = np.asarray(eps, dtype=float)
    errors = np.asarray(errors, dtype=float)
    usable = np.isfinite(errors) & (errors > FIT_FLOOR)
    if usable.sum() < 3:
        return SlopeFit(points=int(usable.sum()))
    x, y = np.log(eps[usable]), np.log(errors[usable])
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    discarded = False
    if len(x) >= 4:
        largest = int(np.argmax(x))
        others = np.delete(residuals, largest)
        rms_others = float(np.sqrt(np.mean(others**2)))
        if abs(residuals[largest]) > max(OUTLIER_FACTOR * rms_others, 1e-12):
            x, y = np.delete(x, largest), np.delete(y, largest)
            slope, intercept = np.polyfit(x, y, 1)
            residuals = y - (slope * x + intercept)
            discarded = True
            logger.info("Largest-eps point discarded from the slope fit")
    return SlopeFit(
        slope=float(slope),
        intercept=float(intercept),
        rms=float(np.sqrt(np.mean(residuals**2))),
        points=len(x),
        discarded_largest=discarded,
    )


@dataclass(frozen=True)
class SweepCase:
    """Inputs shared by every eps of a sweep.

    ``cells`` is the number of grid cells per scaled period and must equal the
    cell-problem resolution of ``hd``. When ``target`` is given the source is
    manufactured so that the discrete homogenized solution equals it.
    """

    geometry: InclusionSet
    hd: HomogenizedData
    domain: Domain
    cells: int
    f: object = 1.0
    target: object = None
    smoothing: float | None = None
    coupled: bool = False
    rule: RasterRule = RasterRule.CENTER


def sweep_resolution(case: SweepCase, eps: float) -> int:
    resolution = case.cells * case.domain.side / (eps * case.geometry.period)
    rounded = int(round(resolution))
    if abs(resolution - rounded) > 1e-9 * resolution:
        raise IncommensurateGridError(f"{case.cells} cells per period at eps={eps:g} give a non-integer resolution {resolution:g}")
    return rounded


def solve_sweep_point(case: SweepCase, eps: float) -> ErrorRow:
    """Solve the eps-problem, the homogenized problem and the auxiliary problem and measure the errors."""
    resolution = sweep_resolution(case, eps)
    if case.target is not None:
        grid = Grid(resolution, case.geometry.dim, case.domain.side, periodic=case.domain.periodic)
        u_target = as_grid_function(case.target, grid)
        f = manufactured_rhs(case.hd, u_target)
    else:
        f = case.f
    p = build_eps_problem(case.geometry, case.domain, eps, f, resolution, case.rule)
    u_eps = solve_eps_problem(p)
    u_bar = solve_homogenized(case.hd, p.f, case.domain, resolution)

    smoothing = case.smoothing * eps if case.smoothing else None
    expansion = two_scale_expansion(u_bar, case.hd.correctors, case.hd.v, p, smoothing=smoothing)
    row = error_report(u_eps, expansion, p, energy_residual=energy_identity_residual(p.operator, u_eps, p.f))

    v_eps = solve_auxiliary(p, p.f - u_bar)
    inside = inside_error_diagnostics(u_eps, u_bar, v_eps, p)
    update = {
        "inside_left": inside.left,
        "inside_right": inside.right,
        "inside_ratio": inside.ratio,
        "hminus1_defect": inside.hminus1_defect,
    }
    if case.coupled:
        coupled = solve_coupled_two_scale(case.hd, p)
        errors = coupled_error_report(u_eps, coupled, case.hd.correctors, p)
        update |= {"coupled_h1_outside": errors.h1_outside, "coupled_l2": errors.l2}
    return row.model_copy(update=update)


def _slopes(eps: list[float], rows: list[ErrorRow]) -> dict[str, SlopeFit]:
    fits = {"total": fit_slope(eps, [row.total for row in rows])}
    for column in ("err_h1_outside", "err_l2_inside", "grad_defect", "coupled_l2"):
        values = [getattr(row, column) for row in rows]
        if all(value is not None for value in values):
            fits[column] = fit_slope(eps, values)
    return fits


def run_sweep(case: SweepCase, eps_list, threads: int | None = None) -> SweepReport:
    """Error rows for every eps (largest first) and the fitted slopes."""
    eps_list = sorted({float(e) for e in eps_list}, reverse=True)
    if not eps_list:
        raise InsufficientSweepError(0, needed=1)
    logger.info(f"Sweep over eps={eps_list} on a {case.domain.kind.value} of side {case.domain.side}")
    rows = parallel_map(lambda eps: solve_sweep_point(case, eps), eps_list, threads)
    report = SweepReport(domain=case.domain.kind, eps=eps_list, rows=rows, slopes=_slopes(eps_list, rows))
    total = report.slopes["total"]
    if total.slope is None:
        logger.warning("Slope undefined: fewer than three nonzero errors")
    else:
        logger.info(f"Fitted slope {total.slope:.3f} over {total.points} points")
    return report


def _row_stat(rows: list[ErrorRow], reducer) -> ErrorRow:
    first = rows[0]
    values = {}
    for column in ERROR_COLUMNS:
        column_values = [getattr(row, column) for row in rows]
        values[column] = None if any(v is None for v in column_values) else float(reducer(np.asarray(column_values)))
    return ErrorRow(eps=first.eps, resolution=first.resolution, **values)


def aggregate_sweeps(reports: list[SweepReport]) -> SweepReport:
    """Mean and standard error of every error column across realizations."""
    if not reports:
        raise InsufficientSweepError(0, needed=1)
    eps = reports[0].eps
    if any(report.eps != eps for report in reports):
        raise SweepMismatchError("Sweep reports cover different eps lists")
    count = len(reports)
    means, errs = [], []
    for k in range(len(eps)):
        rows = [report.rows[k] for report in reports]
        means.append(_row_stat(rows, np.mean))
        errs.append(_row_stat(rows, lambda a: a.std(ddof=1) / np.sqrt(count) if count > 1 else 0.0))
    return SweepReport(
        domain=reports[0].domain,
        realizations=count,
        eps=eps,
        rows=means,
        stderr=errs,
        slopes=_slopes(eps, means),
    )


def sweep_frame(report: SweepReport) -> pd.DataFrame:
    """CSV layout of a sweep: one row per eps plus the fitted slope of the total error."""
    frame = pd.DataFrame(
        {
            "eps": report.eps,
            "resolution": [row.resolution for row in report.rows],
            "errH1_outside": [row.err_h1_outside for row in report.rows],
            "errL2_inside": [row.err_l2_inside for row in report.rows],
            "grad_defect": [row.grad_defect for row in report.rows],
            "inside_ratio": [row.inside_ratio for row in report.rows],
            "hminus1_defect": [row.hminus1_defect for row in report.rows],
            "coupled_l2": [row.coupled_l2 for row in report.rows],
        }
    )
    if report.stderr is not None:
        frame["errH1_outside_stderr"] = [row.err_h1_outside for row in report.stderr]
        frame["errL2_inside_stderr"] = [row.err_l2_inside for row in report.stderr]
    frame["slope"] = report.slopes["total"].slope
    return frame
