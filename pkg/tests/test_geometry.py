"""
Unit tests for the geometry module.

This module tests the inclusion samplers, tiling, rasterization with its
connectivity check, and the separation statistics.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.models import CellCluster, Disc, InclusionModel, InclusionSet
from src.modules.geometry.exceptions import (
    ConnectivityError,
    FullCoverageError,
    GeometryOverlapError,
    InsufficientInclusionsError,
    InvalidGeometryParameterError,
    PercolationThresholdWarning,
    ResampleRequired,
    SaturationWarning,
)
from src.modules.geometry.schemas import FixedRadius, RasterRule, UniformRadius
from src.modules.geometry.service import (
    admissible_exponent,
    chess_from_colors,
    check_disjoint,
    convex_threshold,
    halfgap_from_points,
    pairwise_gaps,
    rasterize,
    sample_chess_percolation,
    sample_hard_discs_rsa,
    sample_periodic_lattice,
    sample_poisson_halfgap,
    sample_random_capsules,
    separation_moments,
    tile,
)
from src.modules.geometry.unionfind import label_components


def ring_cluster() -> InclusionSet:
    """Eight unit squares enclosing the square at (2, 2) on a 6-periodic lattice."""
    ring = [[i, j] for i in (1, 2, 3) for j in (1, 2, 3) if (i, j) != (2, 2)]
    return InclusionSet(
        model=InclusionModel.CUSTOM,
        period=6.0,
        dim=2,
        inclusions=[CellCluster(id=0, cells=ring)],
    )


# ============================================================================
# Tests: Samplers
# ============================================================================

class TestPeriodicLattice:
    """Tests for the deterministic disc lattice."""

    def test_one_centered_disc(self, disc_lattice):
        """Test that the lattice holds one disc at the cell center."""
        assert disc_lattice.count == 1
        assert disc_lattice.inclusions[0].center == [0.5, 0.5]
        assert disc_lattice.model == InclusionModel.PERIODIC_LATTICE

    def test_overlapping_images_rejected(self):
        """Test that a disc reaching its periodic image is rejected."""
        with pytest.raises(GeometryOverlapError):
            sample_periodic_lattice(0.5)

    def test_nonpositive_radius_rejected(self):
        """Test that a zero radius is a parameter error."""
        with pytest.raises(InvalidGeometryParameterError):
            sample_periodic_lattice(0.0)


class TestHardDiscsRSA:
    """Tests for random sequential adsorption of discs."""

    def test_same_seed_same_sample(self):
        """Test that sampling is a pure function of the seed."""
        first = sample_hard_discs_rsa(20.0, FixedRadius(radius=0.05), 0.2, seed=7)
        second = sample_hard_discs_rsa(20.0, FixedRadius(radius=0.05), 0.2, seed=7)
        assert first.model_dump() == second.model_dump()

    def test_margin_respected(self):
        """Test that every pair keeps the relative separation margin."""
        law = UniformRadius(low=0.02, high=0.06)
        sample = sample_hard_discs_rsa(30.0, law, 0.5, seed=3)
        radii = np.array([d.radius for d in sample.inclusions])
        gaps = pairwise_gaps(sample)
        required = 0.5 * np.maximum(radii[:, None], radii[None, :])
        off_diagonal = ~np.eye(len(radii), dtype=bool)
        assert np.all(gaps[off_diagonal] >= required[off_diagonal] - 1e-12)
        check_disjoint(sample)

    def test_saturation_flagged(self):
        """Test that an unreachable target stops at the budget with a warning."""
        with pytest.warns(SaturationWarning):
            sample = sample_hard_discs_rsa(100.0, FixedRadius(radius=0.2), 0.0, seed=0)
        assert sample.saturated
        assert sample.count < 100

    def test_radius_too_large_rejected(self):
        """Test that discs wider than half the period are rejected."""
        with pytest.raises(GeometryOverlapError):
            sample_hard_discs_rsa(1.0, FixedRadius(radius=0.6), 0.0)

    def test_negative_margin_rejected(self):
        """Test that a negative separation margin is a parameter error."""
        with pytest.raises(InvalidGeometryParameterError):
            sample_hard_discs_rsa(1.0, FixedRadius(radius=0.1), -0.1)


class TestPoissonHalfGap:
    """Tests for the Poisson half-gap model."""

    def test_radius_is_half_nearest_distance(self):
        """Test that each radius is half the torus distance to the nearest point."""
        points = np.array([[0.1, 0.1], [0.3, 0.1], [0.7, 0.8]])
        sample = halfgap_from_points(points, 1.0)
        radii = [d.radius for d in sample.inclusions]
        assert radii[0] == pytest.approx(0.1)
        assert radii[1] == pytest.approx(0.1)

    def test_nearest_pair_touches(self):
        """Test that the closest pair is tangent, so the separation moment is infinite."""
        sample = sample_poisson_halfgap(20.0, seed=3)
        report = separation_moments(sample, alpha=1.0)
        assert report.infinite
        assert report.moment_nu == float("inf")
        assert report.admissible_p is None

    def test_single_point_rejected(self):
        """Test that one point has no nearest neighbor."""
        with pytest.raises(InsufficientInclusionsError):
            halfgap_from_points(np.array([[0.5, 0.5]]), 1.0)


class TestChessPercolation:
    """Tests for the random chess structure."""

    def test_all_white_gives_no_inclusions(self):
        """Test that an all-white lattice has an empty F."""
        sample = chess_from_colors(np.zeros((4, 4), dtype=bool))
        assert sample.count == 0
        assert sample.period == 4.0

    def test_single_black_square(self):
        """Test that one black square becomes one single-cell cluster."""
        black = np.zeros((6, 6), dtype=bool)
        black[1, 1] = True
        sample = chess_from_colors(black)
        assert sample.count == 1
        assert len(sample.inclusions[0].cells) == 1

    def test_blocking_row_requires_resample(self):
        """Test that a black row leaves no white cluster spanning both axes."""
        black = np.zeros((6, 6), dtype=bool)
        black[0, :] = True
        with pytest.raises(ResampleRequired):
            chess_from_colors(black)

    def test_threshold_warning(self):
        """Test that mu above the percolation threshold warns."""
        with pytest.warns(PercolationThresholdWarning):
            try:
                sample_chess_percolation(0.45, 16, seed=0)
            except ResampleRequired:
                pass

    def test_invalid_mu_rejected(self):
        """Test that mu outside [0, 1) is a parameter error."""
        with pytest.raises(InvalidGeometryParameterError):
            sample_chess_percolation(1.0, 8)


class TestRandomCapsules:
    """Tests for the capsule sampler."""

    def test_minimum_gap_and_mu_moment(self):
        """Test that capsules keep the absolute gap and report the width moments."""
        sample = sample_random_capsules(20.0, FixedRadius(radius=0.1), 0.03, 0.02, seed=1)
        assert sample.count >= 2
        gaps = pairwise_gaps(sample)
        off_diagonal = ~np.eye(sample.count, dtype=bool)
        assert np.all(gaps[off_diagonal] >= 0.02 - 1e-12)
        report = separation_moments(sample, alpha=1.0, beta=2.0)
        assert report.moment_mu is not None
        assert report.moment_gap is not None
        assert report.beta == 2.0

    def test_capsules_too_long_rejected(self):
        """Test that capsules longer than the period are rejected."""
        with pytest.raises(GeometryOverlapError):
            sample_random_capsules(1.0, FixedRadius(radius=0.5), 0.05, 0.0)


class TestTile:
    """Tests for periodization over several cells."""

    def test_copies_and_period(self, disc_lattice):
        """Test that tiling multiplies the count and the period."""
        tiled = tile(disc_lattice, 3)
        assert tiled.count == 9
        assert tiled.period == 3.0
        assert sorted(d.id for d in tiled.inclusions) == list(range(9))

    def test_tiled_indicator_matches(self, disc_lattice):
        """Test that the tiled indicator is the tiled bitmap."""
        single = rasterize(disc_lattice, 16)
        tiled = rasterize(tile(disc_lattice, 2), 32)
        assert np.array_equal(tiled.cells, np.tile(single.cells, (2, 2)))

    def test_zero_copies_rejected(self, disc_lattice):
        """Test that fewer than one copy is a parameter error."""
        with pytest.raises(InvalidGeometryParameterError):
            tile(disc_lattice, 0)


# ============================================================================
# Tests: Rasterization
# ============================================================================

class TestRasterize:
    """Tests for the indicator bitmap and its checks."""

    @pytest.mark.parametrize("rule", [RasterRule.CENTER, RasterRule.AREA])
    def test_volume_fraction_close_to_area(self, disc_lattice, rule):
        """Test that the bitmap fraction approximates the disc area."""
        chi = rasterize(disc_lattice, 32, rule)
        assert chi.volume_fraction == pytest.approx(np.pi / 16, abs=0.02)

    def test_disconnected_complement_rejected(self):
        """Test that an enclosed pocket of the complement is rejected."""
        with pytest.raises(ConnectivityError) as excinfo:
            rasterize(ring_cluster(), 12)
        assert excinfo.value.component_count == 2

    def test_full_coverage_rejected(self):
        """Test that inclusions covering every cell are rejected."""
        full = InclusionSet(
            model=InclusionModel.CUSTOM,
            period=2.0,
            dim=2,
            inclusions=[CellCluster(id=0, cells=[[0, 0], [0, 1], [1, 0], [1, 1]])],
        )
        with pytest.raises(FullCoverageError):
            rasterize(full, 8)

    def test_unchecked_raster_skips_connectivity(self):
        """Test that check=False returns the bitmap of a disconnected geometry."""
        chi = rasterize(ring_cluster(), 12, check=False)
        assert chi.cells.sum() == 8 * 4

    def test_resolution_floor(self, disc_lattice):
        """Test that fewer than four cells per axis is rejected."""
        with pytest.raises(InvalidGeometryParameterError):
            rasterize(disc_lattice, 3)


class TestLabelComponents:
    """Tests for the periodic component labelling."""

    def test_periodic_merge(self):
        """Test that cells touching across the boundary merge on a torus only."""
        mask = np.zeros((6, 6), dtype=bool)
        mask[0, 0] = mask[5, 0] = True
        _, periodic = label_components(mask, periodic=True)
        _, box = label_components(mask, periodic=False)
        assert periodic == 1
        assert box == 2

    @given(seed=st.integers(0, 2**16))
    @settings(max_examples=25, deadline=None)
    def test_labels_cover_mask(self, seed):
        """Test that labels are positive exactly on the mask and run 1..count."""
        mask = np.random.default_rng(seed).random((8, 8)) < 0.4
        labels, count = label_components(mask, periodic=True)
        assert np.array_equal(labels > 0, mask)
        assert set(np.unique(labels[mask])) == set(range(1, count + 1))


# ============================================================================
# Tests: Separation statistics
# ============================================================================

class TestSeparation:
    """Tests for nearest-neighbor separations and their moments."""

    def test_two_disc_moment(self):
        """Test the moment of two discs at gap 0.1 and diameter 0.4."""
        pair = InclusionSet(
            model=InclusionModel.CUSTOM,
            period=1.0,
            dim=2,
            inclusions=[
                Disc(id=0, center=[0.25, 0.5], radius=0.2),
                Disc(id=1, center=[0.75, 0.5], radius=0.2),
            ],
        )
        report = separation_moments(pair, alpha=1.0)
        assert [s.rho for s in report.inclusions] == pytest.approx([0.1, 0.1])
        assert [s.nu for s in report.inclusions] == pytest.approx([0.25, 0.25])
        assert report.moment_nu == pytest.approx(8.0)
        assert report.admissible_p == pytest.approx(1.0)

    def test_single_inclusion_rejected(self, disc_lattice):
        """Test that one inclusion has no separation statistics."""
        with pytest.raises(InsufficientInclusionsError):
            separation_moments(disc_lattice, alpha=1.0)

    def test_admissible_exponent_grows_with_alpha(self):
        """Test that a higher finite moment admits a larger exponent."""
        sample = sample_hard_discs_rsa(10.0, FixedRadius(radius=0.05), 0.5, seed=2)
        low = admissible_exponent(separation_moments(sample, alpha=1.0))
        high = admissible_exponent(separation_moments(sample, alpha=3.0))
        assert low == pytest.approx(1.0)
        assert high == pytest.approx(1.5)

    @pytest.mark.parametrize("dim, expected", [(1, 1.0), (2, 1.2), (3, 4.0 / 3.0)])
    def test_convex_threshold(self, dim, expected):
        """Test the exponent available to strictly convex inclusions."""
        assert convex_threshold(dim) == pytest.approx(expected)
