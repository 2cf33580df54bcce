"""
Unit tests for the acceptance suite driver.
"""
import pytest

from src.config.experiment import RsaGeometry
from src.modules.geometry.schemas import FixedRadius
from src.modules.geometry.service import check_disjoint, pairwise_gaps
from src.modules.stochastic.service import draw_realization
from src.modules.verify.exceptions import UnknownCheckError
from src.modules.verify.schemas import CheckResult, VerifyReport
from src.modules.verify.service import CHECKS, QUICK, _offset_disc, format_table, run_acceptance


class TestAcceptanceSuite:
    """Tests for running selected acceptance checks."""

    def test_selected_checks_pass(self):
        """Test the cheap checks in quick mode."""
        report = run_acceptance(quick=True, threads=1, only=["dense_oracle_equivalence", "resonant_cell_1d"])
        assert [check.name for check in report.checks] == ["dense_oracle_equivalence", "resonant_cell_1d"]
        assert report.passed, format_table(report)

    @pytest.mark.slow
    def test_reproducibility_check(self):
        """Test that two reproducible runs write identical files."""
        report = run_acceptance(quick=True, threads=1, only=["reproducibility"])
        assert report.passed, report.checks[0].detail

    @pytest.mark.slow
    def test_maximum_principles_quick(self):
        """Test that the sign and bound checks pass on resampled hard-disc geometries."""
        report = run_acceptance(quick=True, threads=1, only=["maximum_principles"])
        assert report.passed, format_table(report)

    @pytest.mark.slow
    def test_a_bar_structure_quick(self):
        """Test that the lattice homogenized matrix is isotropic to round-off."""
        report = run_acceptance(quick=True, threads=1, only=["a_bar_structure"])
        check = report.checks[0]
        assert check.passed, check.detail
        assert check.limit == "isotropy <= 1e-10"

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["bounded_domain_rate", "no_boundary_layer_rate", "coupled_system_rate"])
    def test_rate_checks_quick(self, name):
        """Test each error-rate check at the quick scale."""
        report = run_acceptance(quick=True, threads=1, only=[name])
        assert report.passed, format_table(report)

    @pytest.mark.slow
    def test_weak_limit_quick(self):
        """Test that every weak-limit defect decreases at the quick scale."""
        report = run_acceptance(quick=True, threads=1, only=["weak_limit_defects"])
        assert report.passed, report.checks[0].detail

    @pytest.mark.slow
    def test_extension_trend_quick(self):
        """Test that C(2) of the tangent family grows under refinement at the quick scale."""
        report = run_acceptance(quick=True, threads=1, only=["extension_constant_trend"])
        check = report.checks[0]
        assert check.value is not None and check.value > 0.0, check.detail

    def test_unknown_check(self):
        """Test that an unknown check name is a config error."""
        with pytest.raises(UnknownCheckError) as excinfo:
            run_acceptance(only=["no_such_check"])
        assert excinfo.value.exit_code == 2

    def test_check_order(self):
        """Test that the suite lists its checks in a fixed order."""
        assert list(CHECKS)[0] == "empty_geometry_identity"
        assert list(CHECKS)[-1] == "reproducibility"


class TestFormatTable:
    """Tests for the pass/fail table."""

    def test_table(self):
        """Test one line per check plus header and footer."""
        report = VerifyReport(
            quick=True,
            checks=[
                CheckResult(name="a", passed=True, value=1e-12, limit="<= 1e-09"),
                CheckResult(name="b", passed=False),
            ],
        )
        lines = format_table(report).splitlines()
        assert len(lines) == 4
        assert "FAIL" in lines[2]
        assert lines[-1] == "1/2 passed"
        assert report.failed == ["b"]


class TestCheckGeometries:
    """Tests for the geometries the checks are built on."""

    def test_box_rate_disc_off_center(self):
        """Test that the box-rate disc is a valid cell geometry away from the cell center."""
        geometry = _offset_disc()
        center = geometry.inclusions[0].center
        assert center[0] != 0.5 and center[1] != 0.5
        check_disjoint(geometry)

    def test_quick_box_sweep(self):
        """Test that the quick box sweep skips eps = 1/4 and still fits a slope."""
        assert max(QUICK.box_eps) < max(QUICK.sweep_eps)
        assert len(QUICK.box_eps) >= 3

    def test_hard_disc_draws_two_cells_apart(self):
        """Test that the maximum-principle geometries keep their discs two grid cells apart."""
        cells = QUICK.max_principle_cells
        for seed in range(3):
            config = RsaGeometry(
                model="HardDiscsRSA", intensity=8.0, radius=FixedRadius(radius=0.1), separation_margin=0.5, seed=seed
            )
            geometry, chi, _ = draw_realization(config, seed, 1, cells)
            assert geometry.count >= 2
            assert pairwise_gaps(geometry).min() >= 2.0 / cells - 1e-9
            assert chi.grid.n == cells
