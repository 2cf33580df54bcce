"""Acceptance checks.

Each check builds its own small experiment, compares one measured quantity against
its acceptance band and returns a `CheckResult`. A check that raises a `LabError`
fails with the error detail. ``quick`` swaps in coarser resolutions and shorter eps
lists so the whole suite runs in a few minutes.
"""

import hashlib
import logging
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import special

from src.app.context import RunOptions
from src.config.experiment import RsaGeometry, parse_experiment
from src.infrastructure.errors import LabError
from src.models import BoundaryCondition, CoeffField, Disc, Grid, GridFunction, InclusionModel, InclusionSet
from src.modules.cell.router import run_cell
from src.modules.cell.schemas import HomogenizedSummary
from src.modules.cell.service import (
    compute_homogenized_data,
    corrector_defect,
    solve_corrector_massive,
    solve_corrector_soft,
    solve_resonant_cell,
)
from src.modules.dporosity.diagnostics import verify_weak_limit
from src.modules.dporosity.schemas import Domain, DomainKind
from src.modules.dporosity.service import build_eps_problem, solve_auxiliary, solve_eps_problem, solve_homogenized
from src.modules.dporosity.sweep import SweepCase, compact_bump, run_sweep, source_for
from src.modules.extlab.service import extension_constant_survey
from src.modules.geometry.router import run_geometry
from src.modules.geometry.schemas import FixedRadius
from src.modules.geometry.service import rasterize, sample_periodic_lattice, sample_poisson_halfgap
from src.modules.linalg.service import cg_solve, dense_solve
from src.modules.mesh.service import assemble_operator, norm, rhs_from_field
from src.modules.stochastic.service import draw_realization
from .exceptions import UnknownCheckError
from .schemas import CheckResult, VerifyReport

logger = logging.getLogger(__name__)

MEAN_V_1D = (1.0 - np.tanh(1.0)) / 2.0
DISC_MEAN_V_2D = 1.0 - 2.0 * special.i1(1.0) / special.i0(1.0)


@dataclass(frozen=True)
class Scale:
    """Resolutions and eps lists of one suite mode."""

    empty_n: int
    resonant_1d_n: int
    resonant_2d_n: int
    cell_n: int
    corrector_n: int
    sweep_eps: tuple[float, ...]
    box_eps: tuple[float, ...]
    sweep_cells: int
    weak_eps: tuple[float, ...]
    weak_n: int
    max_principle_runs: int
    max_principle_cells: int
    oracle_runs: int
    extension_n: tuple[int, int]
    extension_samples: int


FULL = Scale(
    empty_n=256,
    resonant_1d_n=4096,
    resonant_2d_n=1024,
    cell_n=512,
    corrector_n=128,
    sweep_eps=(1 / 8, 1 / 16, 1 / 32, 1 / 64),
    box_eps=(1 / 8, 1 / 16, 1 / 32, 1 / 64),
    sweep_cells=16,
    weak_eps=(1 / 8, 1 / 16, 1 / 32),
    weak_n=512,
    max_principle_runs=20,
    max_principle_cells=64,
    oracle_runs=50,
    extension_n=(256, 512),
    extension_samples=16,
)

QUICK = Scale(
    empty_n=128,
    resonant_1d_n=1024,
    resonant_2d_n=256,
    cell_n=128,
    corrector_n=64,
    sweep_eps=(1 / 4, 1 / 8, 1 / 16),
    box_eps=(1 / 8, 1 / 16, 1 / 32),
    sweep_cells=16,
    weak_eps=(1 / 4, 1 / 8, 1 / 16),
    weak_n=256,
    max_principle_runs=5,
    max_principle_cells=40,
    oracle_runs=10,
    extension_n=(128, 256),
    extension_samples=4,
)


@dataclass
class SuiteContext:
    scale: Scale
    threads: int | None = None
    sweeps: dict | None = None


def _result(name: str, passed: bool, value: float | None, limit: str, detail: str = "") -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), value=None if value is None else float(value), limit=limit, detail=detail)


def _disc_lattice(radius: float = 0.25, period: float = 1.0, dim: int = 2) -> InclusionSet:
    return sample_periodic_lattice(radius, period, dim)


def check_empty_geometry(ctx: SuiteContext) -> CheckResult:
    n = ctx.scale.empty_n
    empty = InclusionSet(model=InclusionModel.CUSTOM, period=1.0, dim=2)
    domain = Domain(kind=DomainKind.BOX)
    identity = HomogenizedSummary(
        a_bar=np.eye(2).tolist(),
        a_bar_energy=np.eye(2).tolist(),
        consistency_error=0.0,
        mean_v=0.0,
        vol_frac=0.0,
        resolution=1,
        dim=2,
    )
    sine, _ = source_for("sine", domain)
    u_bar = solve_homogenized(identity, sine, domain, n)
    worst = 0.0
    for eps in (1 / 4, 1 / 8):
        u_eps = solve_eps_problem(build_eps_problem(empty, domain, eps, sine, n))
        worst = max(worst, norm(u_eps - u_bar))
    return _result("empty_geometry_identity", worst <= 1e-9, worst, "<= 1e-09")


def check_resonant_1d(ctx: SuiteContext) -> CheckResult:
    chi = rasterize(_disc_lattice(radius=1.0, period=4.0, dim=1), ctx.scale.resonant_1d_n)
    _, mean_v = solve_resonant_cell(chi)
    error = abs(mean_v - MEAN_V_1D)
    return _result("resonant_cell_1d", error <= 1e-4, error, "<= 1e-04", f"E[v]={mean_v:.8f}")


def check_resonant_2d(ctx: SuiteContext) -> CheckResult:
    chi = rasterize(_disc_lattice(radius=1.0, period=4.0), ctx.scale.resonant_2d_n)
    v, _ = solve_resonant_cell(chi)
    disc_mean = float(v.values[chi.cells].mean())
    error = abs(disc_mean - DISC_MEAN_V_2D)
    return _result("resonant_cell_2d", error <= 5e-3, error, "<= 5e-03", f"disc average {disc_mean:.6f}")


def check_a_bar_structure(ctx: SuiteContext) -> CheckResult:
    chi = rasterize(_disc_lattice(), ctx.scale.cell_n)
    hd = compute_homogenized_data(chi, ctx.threads, with_flux=False)
    a = hd.a_bar
    anisotropy = max(abs(a[0, 0] - a[1, 1]), abs(a[0, 1]))
    eigenvalues = np.linalg.eigvalsh(a)
    upper = 1.0 - hd.vol_frac
    bounded = eigenvalues.min() > 0 and eigenvalues.max() <= upper + 1e-10
    passed = anisotropy <= 1e-10 and bounded and hd.consistency_error <= 1e-6
    detail = f"eigenvalues {eigenvalues.tolist()}, bound {upper:.6f}, consistency {hd.consistency_error:.2e}"
    return _result("a_bar_structure", passed, anisotropy, "isotropy <= 1e-10", detail)


def check_corrector_convergence(ctx: SuiteContext) -> CheckResult:
    chi = rasterize(_disc_lattice(), ctx.scale.corrector_n)
    soft = solve_corrector_soft(chi, threads=ctx.threads)
    defects = [
        corrector_defect(soft, solve_corrector_massive(chi, eps, threads=ctx.threads), chi)
        for eps in (1 / 4, 1 / 8, 1 / 16, 1 / 32)
    ]
    decreasing = all(b < a for a, b in zip(defects, defects[1:]))
    return _result(
        "corrector_convergence", decreasing, defects[-1], "strictly decreasing", f"defects {np.round(defects, 8).tolist()}"
    )


def check_flux_identities(ctx: SuiteContext) -> CheckResult:
    chi = rasterize(_disc_lattice(), ctx.scale.corrector_n)
    hd = compute_homogenized_data(chi, ctx.threads, with_flux=True)
    antisymmetric = all(
        np.array_equal(block[(j, k)], -block[(k, j)]) for block in hd.sigma.values() for (j, k) in block
    )
    worst = max(value for key, value in hd.residuals.items() if key != "consistency")
    return _result(
        "flux_inclusion_correctors",
        antisymmetric and worst <= 1e-8,
        worst,
        "<= 1e-08",
        "sigma antisymmetric" if antisymmetric else "sigma not antisymmetric",
    )


def _offset_disc(radius: float = 0.25, center: float = 0.3) -> InclusionSet:
    disc = Disc(id=0, center=[center, center], radius=radius)
    return InclusionSet(model=InclusionModel.CUSTOM, period=1.0, dim=2, inclusions=[disc])


def _sweep(ctx: SuiteContext, kind: DomainKind):
    if ctx.sweeps is None:
        ctx.sweeps = {}
    if kind in ctx.sweeps:
        return ctx.sweeps[kind]
    cells = ctx.scale.sweep_cells
    domain = Domain(kind=kind)
    if kind == DomainKind.BOX:
        # off-center so the corrector trace does not vanish on the box faces
        geometry = _offset_disc()
        hd = compute_homogenized_data(rasterize(geometry, cells), ctx.threads, with_flux=False)
        case = SweepCase(geometry=geometry, hd=hd, domain=domain, cells=cells, f=1.0)
        eps_list = ctx.scale.box_eps
    else:
        geometry = _disc_lattice()
        hd = compute_homogenized_data(rasterize(geometry, cells), ctx.threads, with_flux=False)
        case = SweepCase(geometry=geometry, hd=hd, domain=domain, cells=cells, target=compact_bump(1.0), coupled=True)
        eps_list = ctx.scale.sweep_eps
    ctx.sweeps[kind] = run_sweep(case, eps_list, ctx.threads)
    return ctx.sweeps[kind]
    geometry = _disc_lattice()
    hd = compute_homogenized_data(rasterize(geometry, ctx.scale.sweep_cells), ctx.threads, with_flux=False)
    domain = Domain(kind=kind)
    if kind == DomainKind.BOX:
        case = SweepCase(geometry=geometry, hd=hd, domain=domain, cells=ctx.scale.sweep_cells, f=1.0)
    else:
        case = SweepCase(
            geometry=geometry, hd=hd, domain=domain, cells=ctx.scale.sweep_cells, target=compact_bump(1.0), coupled=True
        )
    ctx.sweeps[kind] = run_sweep(case, ctx.scale.sweep_eps, ctx.threads)
    return ctx.sweeps[kind]


def check_box_rate(ctx: SuiteContext) -> CheckResult:
    slope = _sweep(ctx, DomainKind.BOX).slopes["total"].slope
    passed = slope is not None and 0.4 <= slope <= 0.75
    return _result("bounded_domain_rate", passed, slope, "in [0.4, 0.75]")


def check_torus_rate(ctx: SuiteContext) -> CheckResult:
    slope = _sweep(ctx, DomainKind.TORUS).slopes["total"].slope
    return _result("no_boundary_layer_rate", slope is not None and slope >= 0.8, slope, ">= 0.8")


def check_coupled_rate(ctx: SuiteContext) -> CheckResult:
    fit = _sweep(ctx, DomainKind.TORUS).slopes.get("coupled_l2")
    slope = fit.slope if fit else None
    return _result("coupled_system_rate", slope is not None and slope >= 0.8, slope, ">= 0.8")


def check_weak_limit(ctx: SuiteContext) -> CheckResult:
    n = ctx.scale.weak_n
    geometry = _disc_lattice()
    domain = Domain(kind=DomainKind.BOX)
    eps_list = sorted(ctx.scale.weak_eps, reverse=True)
    hd = compute_homogenized_data(rasterize(geometry, int(round(n * eps_list[0]))), ctx.threads, with_flux=False)
    u_bar = solve_homogenized(hd, 1.0, domain, n)
    solutions = []
    for eps in eps_list:
        p = build_eps_problem(geometry, domain, eps, 1.0, n)
        solutions.append((eps, solve_eps_problem(p), p.outside))
    report = verify_weak_limit(solutions, u_bar, hd.mean_v, hd.a_bar, GridFunction(np.ones(u_bar.grid.shape), u_bar.grid, u_bar.bc))
    failing = [name for name, ok in report.decreasing.items() if not ok]
    return _result(
        "weak_limit_defects",
        report.all_decreasing,
        float(len(failing)),
        "0 non-decreasing test functions",
        ", ".join(failing),
    )


def check_maximum_principles(ctx: SuiteContext) -> CheckResult:
    cells = ctx.scale.max_principle_cells
    eps = 1 / 4
    resolution = int(round(cells / eps))
    domain = Domain(kind=DomainKind.BOX)
    worst = 0.0
    for seed in range(ctx.scale.max_principle_runs):
        config = RsaGeometry(
            model="HardDiscsRSA", intensity=8.0, radius=FixedRadius(radius=0.1), separation_margin=0.5, seed=seed
        )
        geometry, chi, _ = draw_realization(config, seed, 1, cells)
        rng = np.random.default_rng(seed)
        f = rng.uniform(0.0, 1.0, size=(resolution, resolution))
        p = build_eps_problem(geometry, domain, eps, GridFunction(f, Grid(resolution, 2, 1.0, periodic=False)), resolution)
        u_eps = solve_eps_problem(p)
        worst = max(worst, -float(u_eps.values.min()))
        hd = compute_homogenized_data(chi, 1, with_flux=False)
        worst = max(worst, -float(hd.v.values.min()), float(hd.v.values.max()) - 1.0)
        u_bar = solve_homogenized(hd, p.f, domain, resolution)
        g = p.f - u_bar
        v_eps = solve_auxiliary(p, g)
        worst = max(worst, float(np.abs(v_eps.values).max() - np.abs(g.values).max()))
    return _result("maximum_principles", worst <= 1e-10, max(worst, 0.0), "violation <= 1e-10")


def check_dense_oracle(ctx: SuiteContext) -> CheckResult:
    rng = np.random.default_rng(12)
    worst = 0.0
    for run in range(ctx.scale.oracle_runs):
        periodic = run % 2 == 0
        grid = Grid(32, 2, 1.0, periodic=periodic)
        coeff = CoeffField(a=rng.uniform(0.1, 1.0, grid.shape), m=rng.uniform(0.5, 1.5, grid.shape), grid=grid)
        bc = BoundaryCondition.natural(grid)
        op = assemble_operator(coeff, bc)
        b = rhs_from_field(op, rng.standard_normal(grid.shape))
        x_cg = op.gather(cg_solve(op, b, tol=1e-13, bc=bc).values)
        x_dense = dense_solve(op.matrix, b)
        worst = max(worst, float(np.linalg.norm(x_cg - x_dense) / np.linalg.norm(x_dense)))
    return _result("dense_oracle_equivalence", worst <= 1e-8, worst, "<= 1e-08")


def check_extension_trend(ctx: SuiteContext) -> CheckResult:
    tangent = sample_poisson_halfgap(20.0, seed=3)
    coarse, fine = ctx.scale.extension_n
    survey = extension_constant_survey(
        {"tangent": tangent}, [2.0, 4.0 / 3.0], [coarse, fine], samples=ctx.scale.extension_samples, threads=ctx.threads
    )
    growth_2 = survey.constant("tangent", 2.0, fine) / survey.constant("tangent", 2.0, coarse) - 1.0
    change_43 = abs(survey.constant("tangent", 4.0 / 3.0, fine) / survey.constant("tangent", 4.0 / 3.0, coarse) - 1.0)
    passed = growth_2 >= 0.25 and change_43 <= 0.25
    return _result(
        "extension_constant_trend", passed, growth_2, "C(2) growth >= 0.25, C(4/3) change <= 0.25",
        f"C(4/3) change {change_43:.3f}; {survey.note}",
    )


REPRODUCIBILITY_CONFIG = """
name = "reproducibility"

[geometry]
model = "ChessPercolation"
mu = 0.3
lattice_size = 8
seed = 1

[cell]
resolution = 32
flux_correctors = false
"""


def _digest(root: Path) -> dict[str, str]:
    return {
        str(path.relative_to(root)): hashlib.sha256(path.read_bytes()).hexdigest()
        for path in sorted(root.rglob("*"))
        if path.is_file() and path.suffix in {".json", ".csv", ".bin"}
    }


def check_reproducibility(ctx: SuiteContext) -> CheckResult:
    config = parse_experiment(REPRODUCIBILITY_CONFIG, "reproducibility")
    digests = []
    for _ in range(2):
        with tempfile.TemporaryDirectory() as tmp:
            options = RunOptions(out=Path(tmp), threads=ctx.threads, reproducible=True)
            run_geometry(config, options)
            run_cell(config, options)
            digests.append(_digest(Path(tmp)))
    differing = sorted(k for k in digests[0].keys() | digests[1].keys() if digests[0].get(k) != digests[1].get(k))
    return _result(
        "reproducibility", not differing and bool(digests[0]), float(len(differing)), "0 differing files", ", ".join(differing)
    )


CHECKS: dict[str, Callable[[SuiteContext], CheckResult]] = {
    "empty_geometry_identity": check_empty_geometry,
    "resonant_cell_1d": check_resonant_1d,
    "resonant_cell_2d": check_resonant_2d,
    "a_bar_structure": check_a_bar_structure,
    "corrector_convergence": check_corrector_convergence,
    "flux_inclusion_correctors": check_flux_identities,
    "bounded_domain_rate": check_box_rate,
    "no_boundary_layer_rate": check_torus_rate,
    "coupled_system_rate": check_coupled_rate,
    "weak_limit_defects": check_weak_limit,
    "maximum_principles": check_maximum_principles,
    "dense_oracle_equivalence": check_dense_oracle,
    "extension_constant_trend": check_extension_trend,
    "reproducibility": check_reproducibility,
}


def run_acceptance(quick: bool = False, threads: int | None = None, only: list[str] | None = None) -> VerifyReport:
    """Run the acceptance checks in a fixed order and collect their results."""
    names = list(CHECKS) if not only else only
    for name in names:
        if name not in CHECKS:
            raise UnknownCheckError(name)
    ctx = SuiteContext(scale=QUICK if quick else FULL, threads=threads)
    results = []
    for name in names:
        logger.info(f"Acceptance check {name}")
        start = time.perf_counter()
        try:
            result = CHECKS[name](ctx)
        except LabError as e:
            logger.error(f"Check {name} raised: {e.detail}")
            result = _result(name, False, None, "no error", e.detail)
        result.seconds = round(time.perf_counter() - start, 3)
        logger.info(f"{name}: {'PASS' if result.passed else 'FAIL'} ({result.seconds:.1f} s)")
        results.append(result)
    return VerifyReport(quick=quick, checks=results)


def format_table(report: VerifyReport) -> str:
    """Plain-text pass/fail table."""
    width = max(len(check.name) for check in report.checks)
    lines = [f"{'check':<{width}}  result  value         limit"]
    for check in report.checks:
        value = "-" if check.value is None else f"{check.value:.4g}"
        lines.append(f"{check.name:<{width}}  {'PASS' if check.passed else 'FAIL':<6}  {value:<12}  {check.limit or ''}")
    lines.append(f"{sum(c.passed for c in report.checks)}/{len(report.checks)} passed")
    return "\n".join(lines)
