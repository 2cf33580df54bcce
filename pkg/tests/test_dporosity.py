"""
Unit tests for the two-scale problems, their diagnostics and the eps sweeps.
"""
import numpy as np
import pytest

from src.models import Disc, Grid, GridFunction, InclusionModel, InclusionSet
from src.modules.cell.exceptions import IncommensurateGridError
from src.modules.cell.service import compute_homogenized_data
from src.modules.dporosity.diagnostics import (
    coupled_error_report,
    inside_error_diagnostics,
    mollify,
    sine_battery,
    two_scale_expansion,
    verify_weak_limit,
)
from src.modules.dporosity.exceptions import (
    InsufficientSweepError,
    SweepMismatchError,
    UnderResolutionWarning,
    UnderResolvedError,
)
from src.modules.dporosity.schemas import CoupledSolution, Domain, DomainKind, ErrorRow, SweepReport
from src.modules.dporosity.service import (
    build_eps_problem,
    manufactured_rhs,
    solve_auxiliary,
    solve_coupled_two_scale,
    solve_eps_problem,
    solve_homogenized,
)
from src.modules.dporosity.sweep import (
    SweepCase,
    aggregate_sweeps,
    compact_bump,
    fit_slope,
    run_sweep,
    source_for,
    sweep_frame,
)
from src.modules.geometry.exceptions import GeometryOverlapError
from src.modules.mesh.service import norm

BOX = Domain()
TORUS = Domain(kind=DomainKind.TORUS)


def sweep_report(eps: list[float], scale: float = 1.0, domain: DomainKind = DomainKind.BOX) -> SweepReport:
    rows = [
        ErrorRow(eps=e, resolution=int(16 / e), err_h1_outside=scale * e, err_l2_inside=scale * e**2, grad_defect=e)
        for e in eps
    ]
    return SweepReport(domain=domain, eps=eps, rows=rows)


# ============================================================================
# Tests: eps-problem
# ============================================================================

class TestEpsProblem:
    """Tests for building and solving the eps-problem."""

    def test_empty_geometry_matches_homogenized(self, empty_set, empty_indicator):
        """Test that without inclusions u_eps and u_bar coincide."""
        hd = compute_homogenized_data(empty_indicator, threads=1, with_flux=False)
        f, _ = source_for("sine", BOX)
        p = build_eps_problem(empty_set, BOX, 0.25, f, 64)
        assert p.inclusion_count == 0
        u_eps = solve_eps_problem(p)
        u_bar = solve_homogenized(hd, p.f, BOX, 64)
        assert np.allclose(u_eps.values, u_bar.values, atol=1e-6)

    def test_incommensurate_eps(self, disc_lattice):
        """Test that eps times the period must be a whole number of grid cells."""
        with pytest.raises(IncommensurateGridError):
            build_eps_problem(disc_lattice, BOX, 0.3, 1.0, 32)

    def test_overlapping_inclusions_rejected(self):
        """Test that overlapping discs never reach the eps-problem."""
        geometry = InclusionSet(
            model=InclusionModel.CUSTOM,
            period=1.0,
            dim=2,
            inclusions=[
                Disc(id=0, center=[0.4, 0.5], radius=0.15),
                Disc(id=1, center=[0.6, 0.5], radius=0.15),
            ],
        )
        with pytest.raises(GeometryOverlapError):
            build_eps_problem(geometry, BOX, 0.25, 1.0, 64)

    def test_under_resolved(self, disc_lattice):
        """Test that inclusions below four cells per diameter are refused."""
        with pytest.raises(UnderResolvedError):
            build_eps_problem(disc_lattice, BOX, 0.125, 1.0, 16)

    def test_under_resolution_warning(self, disc_lattice):
        """Test that six cells per diameter build with a warning."""
        with pytest.warns(UnderResolutionWarning):
            p = build_eps_problem(disc_lattice, BOX, 0.25, 1.0, 48)
        assert p.cell_resolution == 12

    @pytest.mark.parametrize("domain, expected", [(BOX, 2), (TORUS, 4)])
    def test_boundary_copies(self, domain, expected):
        """Test that copies crossing the box boundary are dropped and kept on the torus."""
        geometry = InclusionSet(
            model=InclusionModel.CUSTOM,
            period=1.0,
            dim=2,
            inclusions=[Disc(id=0, center=[0.1, 0.5], radius=0.15)],
        )
        p = build_eps_problem(geometry, domain, 0.5, 1.0, 64)
        assert p.inclusion_count == expected
        if not domain.periodic:
            assert not p.chi_eps.cells[0, :].any()

    def test_lattice_volume_fraction_preserved(self, disc_lattice, disc_indicator):
        """Test that a torus tiling keeps the cell volume fraction."""
        p = build_eps_problem(disc_lattice, TORUS, 0.25, 1.0, 128)
        assert p.inclusion_count == 16
        assert p.chi_eps.volume_fraction == pytest.approx(disc_indicator.volume_fraction)

    def test_constant_source_on_torus(self, disc_lattice, lattice_hd):
        """Test that f = 1 on a torus gives u_eps = u_bar = 1 and w = 0."""
        p = build_eps_problem(disc_lattice, TORUS, 0.25, 1.0, 64)
        assert np.allclose(solve_eps_problem(p).values, 1.0, atol=1e-6)
        assert np.allclose(solve_homogenized(lattice_hd, 1.0, TORUS, 64).values, 1.0, atol=1e-6)
        coupled = solve_coupled_two_scale(lattice_hd, p)
        assert np.allclose(coupled.u_bar.values, 1.0, atol=1e-6)
        assert np.allclose(coupled.w.values, 0.0, atol=1e-6)
        assert coupled.asymmetry < 1e-12

    def test_solution_bounded_by_source(self, disc_lattice):
        """Test that ||u_eps|| <= ||f||."""
        f, _ = source_for("sine", BOX)
        p = build_eps_problem(disc_lattice, BOX, 0.25, f, 64)
        u = solve_eps_problem(p)
        assert np.sqrt(np.sum(u.values**2)) <= np.sqrt(np.sum(p.f.values**2))


class TestAuxiliaryAndHomogenized:
    """Tests for the inclusion problem and the homogenized problem."""

    def test_auxiliary_maximum_principle(self, disc_lattice):
        """Test that 0 <= v_eps <= 1 for g = 1, zero outside the inclusions."""
        p = build_eps_problem(disc_lattice, BOX, 0.25, 1.0, 64)
        v = solve_auxiliary(p, 1.0)
        assert v.values.min() >= 0.0
        assert v.values.max() <= 1.0
        assert not v.values[p.outside].any()

    def test_manufactured_source_recovers_target(self, lattice_hd):
        """Test that the manufactured source reproduces the target exactly."""
        grid = Grid(32, 2, 1.0, periodic=False)
        target = GridFunction.from_callable(grid, compact_bump(1.0))
        f = manufactured_rhs(lattice_hd, target)
        u_bar = solve_homogenized(lattice_hd, f, BOX, 32)
        assert np.allclose(u_bar.values, target.values, atol=1e-6)

    def test_coupled_needs_torus(self, disc_lattice, lattice_hd):
        """Test that the coupled system refuses a box."""
        p = build_eps_problem(disc_lattice, BOX, 0.25, 1.0, 64)
        with pytest.raises(IncommensurateGridError):
            solve_coupled_two_scale(lattice_hd, p)


# ============================================================================
# Tests: Diagnostics
# ============================================================================

class TestDiagnostics:
    """Tests for the expansion and the weak-limit battery."""

    def test_expansion_needs_matching_cell_grid(self, disc_lattice, lattice_hd):
        """Test that cell fields must have one value per eps-grid cell of a period."""
        p = build_eps_problem(disc_lattice, BOX, 0.25, 1.0, 128)
        u_bar = solve_homogenized(lattice_hd, 1.0, BOX, 128)
        with pytest.raises(IncommensurateGridError):
            two_scale_expansion(u_bar, lattice_hd.correctors, lattice_hd.v, p)

    def test_expansion_without_inclusions(self, empty_set, empty_indicator):
        """Test that the expansion reduces to u_bar when F is empty."""
        hd = compute_homogenized_data(empty_indicator, threads=1, with_flux=False)
        p = build_eps_problem(empty_set, BOX, 0.25, 1.0, 64)
        u_bar = solve_homogenized(hd, 1.0, BOX, 64)
        expansion = two_scale_expansion(u_bar, hd.correctors, hd.v, p)
        assert np.allclose(expansion.outside.values, u_bar.values)
        assert np.allclose(expansion.inside.values, u_bar.values)

    def test_inside_diagnostics_without_inclusions(self, empty_set, empty_indicator):
        """Test that the inside error vanishes and the ratio is zero when F is empty."""
        f, _ = source_for("sine", BOX)
        p = build_eps_problem(empty_set, BOX, 0.25, f, 64)
        u_eps = solve_eps_problem(p)
        hd = compute_homogenized_data(empty_indicator, threads=1, with_flux=False)
        u_bar = solve_homogenized(hd, p.f, BOX, 64)
        diagnostics = inside_error_diagnostics(u_eps, u_bar, GridFunction.zeros(p.grid), p)
        assert diagnostics.left == 0.0
        assert diagnostics.ratio == 0.0
        assert diagnostics.right == pytest.approx(0.25 * norm(p.f), rel=1e-4)

    def test_coupled_errors_without_inclusions(self, empty_set, empty_indicator):
        """Test that with w = 0 the coupled L2 error is the homogenized error."""
        hd = compute_homogenized_data(empty_indicator, threads=1, with_flux=False)
        f, _ = source_for("sine", TORUS)
        p = build_eps_problem(empty_set, TORUS, 0.25, f, 64)
        u_eps = solve_eps_problem(p)
        u_bar = solve_homogenized(hd, p.f, TORUS, 64)
        coupled = CoupledSolution(u_bar=u_bar, w=GridFunction.zeros(p.grid), asymmetry=0.0, bound_ratio=0.0)
        errors = coupled_error_report(u_eps, coupled, hd.correctors, p)
        assert errors.l2 == pytest.approx(norm(u_eps - u_bar), abs=1e-12)
        assert errors.l2 < 1e-6
        assert errors.h1_outside < 1e-6

    def test_inside_ratio_bounded_on_lattice(self, disc_lattice, lattice_hd):
        """Test that the inside error ratio does not blow up as eps shrinks."""
        u_bar = solve_homogenized(lattice_hd, 1.0, BOX, 128)
        ratios = []
        for eps in (0.25, 0.125):
            p = build_eps_problem(disc_lattice, BOX, eps, 1.0, 128)
            u_eps = solve_eps_problem(p)
            v_eps = solve_auxiliary(p, p.f - u_bar)
            diagnostics = inside_error_diagnostics(u_eps, u_bar, v_eps, p)
            assert diagnostics.left > 0.0
            ratios.append(diagnostics.ratio)
        assert ratios[1] <= 2.0 * ratios[0]

    def test_mollify_keeps_constants(self):
        """Test that mollification on a torus keeps constants."""
        grid = Grid(32, 2, 1.0)
        u = GridFunction(np.full(grid.shape, 3.0), grid)
        assert np.allclose(mollify(u, 0.1).values, 3.0)

    def test_mollify_below_grid_step(self):
        """Test that a width under one cell is the identity."""
        grid = Grid(8, 2, 1.0)
        u = GridFunction(np.arange(64.0).reshape(grid.shape), grid)
        assert mollify(u, 0.01) is u

    def test_sine_battery_size(self):
        """Test that the battery holds the constant and 4^2 sine modes."""
        battery = sine_battery(Grid(16, 2, 1.0, periodic=False))
        assert len(battery) == 1 + 16
        assert battery[0][0] == "const"

    def test_weak_limit_needs_three_solutions(self):
        """Test that the weak-limit check needs three eps values."""
        grid = Grid(8, 2, 1.0, periodic=False)
        zero = GridFunction.zeros(grid)
        mask = np.ones(grid.shape, dtype=bool)
        with pytest.raises(InsufficientSweepError):
            verify_weak_limit([(0.5, zero, mask), (0.25, zero, mask)], zero, 0.0, np.eye(2), zero)


# ============================================================================
# Tests: Sweeps
# ============================================================================

class TestFitSlope:
    """Tests for the log-log slope fit."""

    def test_exact_power_law(self):
        """Test that errors eps^(1/2) give slope 1/2."""
        eps = 2.0 ** -np.arange(1, 6)
        fit = fit_slope(eps, np.sqrt(eps))
        assert fit.slope == pytest.approx(0.5)
        assert not fit.discarded_largest

    def test_too_few_points(self):
        """Test that fewer than three usable errors leave the slope undefined."""
        fit = fit_slope([0.5, 0.25, 0.125], [1e-3, 1e-4, 0.0])
        assert fit.slope is None
        assert fit.points == 2

    def test_largest_eps_outlier_discarded(self):
        """Test that a pre-asymptotic largest-eps point is dropped."""
        eps = 2.0 ** -np.arange(1, 11)
        errors = eps.copy()
        errors[0] *= 10.0
        fit = fit_slope(eps, errors)
        assert fit.discarded_largest
        assert fit.points == 9
        assert fit.slope == pytest.approx(1.0)


class TestSweeps:
    """Tests for sweep aggregation and the sweep driver."""

    def test_source_for(self):
        """Test the named sources."""
        assert source_for("one", BOX) == (1.0, None)
        f, target = source_for("bump", BOX)
        assert f is None and callable(target)
        with pytest.raises(ValueError):
            source_for("gauss", BOX)

    def test_aggregate_identical_reports(self):
        """Test that identical realizations have zero standard error."""
        eps = [0.5, 0.25, 0.125]
        report = aggregate_sweeps([sweep_report(eps), sweep_report(eps)])
        assert report.realizations == 2
        assert all(row.err_h1_outside == 0.0 for row in report.stderr)
        assert report.rows[0].err_h1_outside == pytest.approx(0.5)
        assert report.slopes["total"].slope is not None

    def test_aggregate_mean(self):
        """Test that the mean row averages the realizations."""
        eps = [0.5, 0.25, 0.125]
        report = aggregate_sweeps([sweep_report(eps, 1.0), sweep_report(eps, 3.0)])
        assert report.rows[1].err_h1_outside == pytest.approx(0.5)
        assert report.stderr[1].err_h1_outside == pytest.approx(0.25)

    def test_aggregate_mismatch(self):
        """Test that reports over different eps lists are not combined."""
        with pytest.raises(SweepMismatchError):
            aggregate_sweeps([sweep_report([0.5, 0.25]), sweep_report([0.5, 0.125])])

    def test_sweep_frame_columns(self):
        """Test the CSV layout of a sweep."""
        eps = [0.5, 0.25, 0.125]
        frame = sweep_frame(aggregate_sweeps([sweep_report(eps), sweep_report(eps)]))
        assert frame["eps"].tolist() == eps
        assert "errH1_outside_stderr" in frame.columns
        assert "slope" in frame.columns

    @pytest.mark.slow
    def test_run_sweep_structure(self, disc_lattice, lattice_hd):
        """Test a two-point sweep on a box."""
        case = SweepCase(geometry=disc_lattice, hd=lattice_hd, domain=BOX, cells=16)
        report = run_sweep(case, [0.25, 0.5], threads=1)
        assert report.eps == [0.5, 0.25]
        assert [row.resolution for row in report.rows] == [32, 64]
        assert report.slopes["total"].slope is None
        assert all(row.err_h1_outside > 0.0 for row in report.rows)
