"""
Unit tests for the periodic cell problems.

Closed forms: in one dimension the resonant function of an interval of length
L is 1 - cosh(x)/cosh(L/2); in two dimensions the one of a disc of radius r is
1 - I0(|x|)/I0(r).
"""
import numpy as np
import pytest
from scipy import special

from src.models import CellCluster, Grid, InclusionModel, InclusionSet, IndicatorGrid
from src.modules.cell.exceptions import IncommensurateGridError
from src.modules.cell.router import massive_frame
from src.modules.cell.schemas import CorrectorVariant
from src.modules.cell.service import (
    IDENTITY_TOL,
    compute_homogenized_data,
    corrector_defect,
    corrector_moment_report,
    scaled_cell_copies,
    solve_corrector_dirichlet,
    solve_corrector_massive,
    solve_corrector_soft,
    solve_resonant_cell,
)
from src.modules.geometry.exceptions import ConnectivityError
from src.modules.geometry.service import rasterize, sample_periodic_lattice
from src.modules.mesh.exceptions import GridMismatchError


# ============================================================================
# Tests: Resonant cell problem
# ============================================================================

class TestResonantCell:
    """Tests for v - lap v = 1 in the inclusions."""

    def test_empty_geometry(self, empty_indicator):
        """Test that v vanishes without inclusions."""
        v, mean_v = solve_resonant_cell(empty_indicator)
        assert mean_v == 0.0
        assert not v.values.any()

    def test_interval_closed_form(self):
        """Test the mean of v on an interval of length 1/2."""
        chi = rasterize(sample_periodic_lattice(0.25, dim=1), 256, check=False)
        _, mean_v = solve_resonant_cell(chi)
        assert mean_v == pytest.approx(0.5 - 2.0 * np.tanh(0.25), abs=1e-4)

    def test_disc_closed_form(self):
        """Test the mean of v on a disc of radius 0.45."""
        r = 0.45
        chi = rasterize(sample_periodic_lattice(r), 256)
        _, mean_v = solve_resonant_cell(chi)
        expected = np.pi * r**2 - 2.0 * np.pi * r * special.i1(r) / special.i0(r)
        assert mean_v == pytest.approx(expected, rel=0.1)

    def test_v_bounds(self, disc_indicator):
        """Test that 0 <= v <= 1 and E[v] < |F|."""
        v, mean_v = solve_resonant_cell(disc_indicator)
        assert v.values.min() >= 0.0
        assert v.values.max() <= 1.0
        assert 0.0 < mean_v < disc_indicator.volume_fraction
        assert not v.values[disc_indicator.complement].any()


# ============================================================================
# Tests: Correctors and the homogenized matrix
# ============================================================================

class TestHomogenizedMatrix:
    """Tests for the soft correctors and a_bar."""

    def test_empty_geometry_gives_identity(self, empty_indicator):
        """Test that a_bar is the identity and v is zero without inclusions."""
        hd = compute_homogenized_data(empty_indicator, threads=1)
        assert np.allclose(hd.a_bar, np.eye(2), atol=1e-8)
        assert hd.mean_v == 0.0

    def test_lattice_bounds(self, lattice_hd):
        """Test symmetry, isotropy and the Voigt-type bound of the lattice."""
        a_bar = lattice_hd.a_bar
        assert np.allclose(a_bar, a_bar.T)
        assert a_bar[0, 0] == pytest.approx(a_bar[1, 1], abs=1e-6)
        assert abs(a_bar[0, 1]) < 1e-6
        assert np.linalg.eigvalsh(a_bar).max() <= 1.0 - lattice_hd.vol_frac + 1e-10
        assert np.linalg.eigvalsh(a_bar).min() > 0.0
        assert lattice_hd.mean_v < lattice_hd.vol_frac

    def test_energy_and_flux_forms_agree(self, lattice_hd):
        """Test that both cell formulas give the same matrix."""
        assert lattice_hd.consistency_error < 1e-6
        assert np.allclose(lattice_hd.a_bar, lattice_hd.a_bar_energy, atol=1e-6)

    def test_summary(self, lattice_hd):
        """Test the JSON summary of the cell data."""
        summary = lattice_hd.summary()
        assert summary.resolution == 16
        assert summary.dim == 2
        assert len(summary.a_bar) == 2

    def test_disconnected_complement_rejected(self):
        """Test that a complement split into two components is rejected."""
        ring = [[i, j] for i in (1, 2, 3) for j in (1, 2, 3) if (i, j) != (2, 2)]
        inclusions = InclusionSet(
            model=InclusionModel.CUSTOM, period=6.0, dim=2, inclusions=[CellCluster(id=0, cells=ring)]
        )
        chi = rasterize(inclusions, 12, check=False)
        with pytest.raises(ConnectivityError):
            solve_corrector_soft(chi)

    def test_box_grid_rejected(self):
        """Test that cell problems refuse a non-periodic grid."""
        grid = Grid(16, 2, 1.0, periodic=False)
        chi = IndicatorGrid(cells=np.zeros(grid.shape, dtype=bool), grid=grid)
        with pytest.raises(GridMismatchError):
            compute_homogenized_data(chi)


class TestFluxCorrectors:
    """Tests for sigma and theta."""

    @pytest.fixture(scope="class")
    def flux_hd(self):
        chi = rasterize(sample_periodic_lattice(0.25), 32)
        return compute_homogenized_data(chi, threads=1, with_flux=True)

    def test_sigma_skew_symmetric(self, flux_hd):
        """Test that sigma_ijk = -sigma_ikj."""
        for i in range(2):
            assert np.array_equal(flux_hd.sigma[i][(0, 1)], -flux_hd.sigma[i][(1, 0)])

    def test_identity_residuals(self, flux_hd):
        """Test that the divergence identities hold to the solver tolerance."""
        for name in ("sigma_0", "sigma_1", "theta"):
            assert flux_hd.residuals[name] <= IDENTITY_TOL

    def test_flux_mean_zero(self, flux_hd):
        """Test that every flux component has mean zero."""
        for field in flux_hd.q.values():
            for component in field.components:
                assert abs(component.mean()) < 1e-12

    def test_moments(self, flux_hd):
        """Test that the corrector moments are finite and ordered."""
        moments = corrector_moment_report(flux_hd.correctors.phi, flux_hd.sigma, flux_hd.theta)
        assert moments.phi_mean_square <= moments.phi_max_square
        assert moments.sigma_mean_square <= moments.sigma_max_square
        assert moments.theta_mean_square <= moments.theta_max_square


# ============================================================================
# Tests: Approximate correctors
# ============================================================================

class TestApproximateCorrectors:
    """Tests for the massive and Dirichlet approximations."""

    def test_massive_converges_to_soft(self, disc_indicator):
        """Test that the massive corrector approaches the soft one as eps shrinks."""
        soft = solve_corrector_soft(disc_indicator, threads=1)
        coarse = corrector_defect(soft, solve_corrector_massive(disc_indicator, 0.5, threads=1), disc_indicator)
        fine = corrector_defect(soft, solve_corrector_massive(disc_indicator, 0.125, threads=1), disc_indicator)
        assert fine < coarse

    def test_massive_frame_sorted(self, lattice_hd):
        """Test that the massive defect table lists eps from coarse to fine."""
        chi = rasterize(sample_periodic_lattice(0.25), 16)
        frame = massive_frame(lattice_hd, chi, [0.25, 0.5], threads=1)
        assert frame["eps"].tolist() == [0.5, 0.25]
        assert "dirichlet_energy_gap" not in frame.columns

    def test_massive_frame_with_dirichlet(self, lattice_hd):
        """Test that the Dirichlet box correctors add an energy gap column."""
        chi = rasterize(sample_periodic_lattice(0.25), 16)
        frame = massive_frame(lattice_hd, chi, [0.5, 0.25], threads=1, dirichlet=True)
        gaps = frame["dirichlet_energy_gap"].to_numpy()
        assert gaps.shape == (2,)
        assert np.all(np.isfinite(gaps))
        assert np.all(gaps >= 0.0)

    def test_massive_rejects_nonpositive_eps(self, disc_indicator):
        """Test that eps must be positive."""
        with pytest.raises(ValueError):
            solve_corrector_massive(disc_indicator, 0.0)

    def test_dirichlet_box(self):
        """Test the Dirichlet corrector on two copies of the cell."""
        chi = rasterize(sample_periodic_lattice(0.25), 8)
        corr = solve_corrector_dirichlet(chi, 0.5, threads=1)
        assert corr.variant == CorrectorVariant.DIRICHLET_DOMAIN
        assert corr.grid.shape == (16, 16)
        assert not corr.grid.periodic

    def test_dirichlet_incommensurate(self, disc_indicator):
        """Test that D/eps must hold a whole number of cells."""
        with pytest.raises(IncommensurateGridError):
            solve_corrector_dirichlet(disc_indicator, 0.3)

    def test_scaled_cell_copies(self):
        """Test the cell count along one side of D/eps."""
        assert scaled_cell_copies(1.0, 0.25, 1.0) == 4
        assert scaled_cell_copies(0.5, 0.25, 1.0) == 8
