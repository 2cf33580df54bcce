"""
Integration tests for the command-line entry point and its exit codes.
"""
import json

import pytest

from src.config import settings
from src.main import build_parser, main
from src.modules.verify.schemas import CheckResult, VerifyReport
from tests.conftest import LATTICE_TOML

SOLVE_TOML = LATTICE_TOML + """
[solve]
eps = 0.25
resolution = 64

[solve.domain]
kind = "torus"
"""

SWEEP_TOML = LATTICE_TOML + """
[sweep]
eps = [0.5, 0.25]
cells_per_period = 16
"""


def write_config(tmp_path, text: str):
    path = tmp_path / "experiment.toml"
    path.write_text(text, encoding="utf-8")
    return path


def cli(*args) -> int:
    return main([*args, "--threads", "1", "--log-level", "ERROR"])


# ============================================================================
# Tests: Parser
# ============================================================================

class TestParser:
    """Tests for the argument parser."""

    def test_subcommands(self):
        """Test that every subcommand is registered."""
        parser = build_parser()
        for command in ("geometry", "cell", "solve", "sweep", "extlab", "verify"):
            args = parser.parse_args([command])
            assert callable(args.handler)

    def test_subcommand_required(self):
        """Test that a subcommand is mandatory."""
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


# ============================================================================
# Tests: Subcommands
# ============================================================================

class TestCommands:
    """Tests for running subcommands end to end."""

    def test_geometry(self, lattice_config_path, tmp_path):
        """Test that the geometry subcommand writes the set and its bitmap."""
        out = tmp_path / "geom"
        assert cli("geometry", "--config", str(lattice_config_path), "--out", str(out)) == 0
        payload = json.loads((out / "geometry.json").read_text())
        assert len(payload["inclusions"]) == 1
        assert "config_hash" in payload
        assert (out / "indicator.bin").exists()

    def test_cell(self, lattice_config_path, tmp_path):
        """Test that the cell subcommand writes a_bar and the residual table."""
        out = tmp_path / "cell"
        assert cli("cell", "--config", str(lattice_config_path), "--out", str(out)) == 0
        summary = json.loads((out / "cell.json").read_text())
        assert summary["a_bar"][0][0] == pytest.approx(summary["a_bar"][1][1], abs=1e-6)
        assert (out / "residuals.csv").exists()
        assert (out / "corrector_moments.json").exists()

    def test_reproducible_rerun(self, lattice_config_path, tmp_path):
        """Test that two reproducible runs produce byte-identical files."""
        for name in ("a", "b"):
            args = ("cell", "--config", str(lattice_config_path), "--out", str(tmp_path / name), "--reproducible")
            assert cli(*args) == 0
        for path in sorted((tmp_path / "a").iterdir()):
            assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes(), path.name

    def test_output_override(self, lattice_config_path, tmp_path, monkeypatch):
        """Test that DPLB_OUT takes precedence over --out."""
        monkeypatch.setattr(settings, "OUT", str(tmp_path / "env"))
        assert cli("geometry", "--config", str(lattice_config_path), "--out", str(tmp_path / "flag")) == 0
        assert (tmp_path / "env" / "geometry.json").exists()
        assert not (tmp_path / "flag").exists()

    def test_solve(self, tmp_path):
        """Test one eps-solve on the torus."""
        out = tmp_path / "solve"
        assert cli("solve", "--config", str(write_config(tmp_path, SOLVE_TOML)), "--out", str(out)) == 0
        summary = json.loads((out / "solve.json").read_text())
        assert summary["inclusion_count"] == 16
        assert summary["cells_per_period"] == 16
        assert summary["errors"]["err_h1_outside"] >= 0.0
        assert (out / "u_eps.bin").exists()

    @pytest.mark.slow
    def test_sweep(self, tmp_path):
        """Test a two-point sweep with its table and plot."""
        out = tmp_path / "sweep"
        assert cli("sweep", "--config", str(write_config(tmp_path, SWEEP_TOML)), "--out", str(out)) == 0
        assert (out / "sweep.csv").exists()
        assert (out / "sweep.svg").exists()


# ============================================================================
# Tests: Exit codes
# ============================================================================

class TestExitCodes:
    """Tests for the mapping of failures to exit codes."""

    def test_missing_config(self, tmp_path, capsys):
        """Test that a subcommand needing a config exits with 2 without one."""
        assert cli("geometry", "--out", str(tmp_path)) == 2
        assert "--config" in capsys.readouterr().err

    def test_invalid_config(self, tmp_path):
        """Test that an invalid experiment file exits with 2."""
        path = write_config(tmp_path, '[geometry]\nmodel = "PeriodicLattice"\nradius = -1.0\n')
        assert cli("geometry", "--config", str(path), "--out", str(tmp_path)) == 2

    def test_missing_section(self, lattice_config_path, tmp_path):
        """Test that a missing [solve] section exits with 2."""
        assert cli("solve", "--config", str(lattice_config_path), "--out", str(tmp_path)) == 2

    def test_acceptance_failure(self, tmp_path, monkeypatch):
        """Test that a failing acceptance check exits with 1."""
        failing = VerifyReport(quick=True, checks=[CheckResult(name="broken", passed=False)])
        monkeypatch.setattr("src.modules.verify.router.run_acceptance", lambda **kwargs: failing)
        assert cli("verify", "--quick", "--out", str(tmp_path)) == 1
        assert (tmp_path / "verify.csv").exists()

    def test_acceptance_success(self, tmp_path, monkeypatch):
        """Test that a passing suite exits with 0."""
        passing = VerifyReport(quick=True, checks=[CheckResult(name="fine", passed=True, seconds=1.5)])
        monkeypatch.setattr("src.modules.verify.router.run_acceptance", lambda **kwargs: passing)
        assert cli("verify", "--reproducible", "--out", str(tmp_path)) == 0
        assert json.loads((tmp_path / "verify.json").read_text())["checks"][0]["seconds"] == 0.0

    def test_unexpected_error(self, lattice_config_path, tmp_path, monkeypatch):
        """Test that an unexpected exception exits with 3."""

        def explode(config, options):
            raise RuntimeError("boom")

        monkeypatch.setattr("src.modules.geometry.router.run_geometry", explode)
        assert cli("geometry", "--config", str(lattice_config_path), "--out", str(tmp_path)) == 3
