"""
Unit tests for experiment files, process settings and logging setup.
"""
import logging

import pytest
from pydantic import ValidationError

from src.config.exceptions import ConfigError, MissingSectionError
from src.config.experiment import LatticeGeometry, RsaGeometry, load_experiment, parse_experiment
from src.config.logging import configure_logging
from src.config.settings import Settings
from src.modules.dporosity.schemas import DomainKind
from src.modules.geometry.schemas import UniformRadius


# ============================================================================
# Tests: Experiment files
# ============================================================================

class TestParseExperiment:
    """Tests for parsing and validating experiment TOML."""

    def test_lattice(self, lattice_config_path):
        """Test a minimal lattice experiment."""
        config = load_experiment(lattice_config_path)
        assert isinstance(config.geometry, LatticeGeometry)
        assert config.geometry.radius == 0.25
        assert config.cell.resolution == 16
        assert config.sweep is None

    def test_discriminated_radius_law(self):
        """Test that the radius law is picked by its tag."""
        config = parse_experiment(
            '[geometry]\nmodel = "HardDiscsRSA"\nintensity = 10.0\n'
            '[geometry.radius]\nlaw = "uniform"\nlow = 0.02\nhigh = 0.05\n'
        )
        assert isinstance(config.geometry, RsaGeometry)
        assert isinstance(config.geometry.radius, UniformRadius)

    def test_sweep_domain(self):
        """Test a sweep on a torus."""
        config = parse_experiment('[sweep]\neps = [0.25, 0.125]\n[sweep.domain]\nkind = "torus"\n')
        assert config.sweep.domain.kind == DomainKind.TORUS
        assert config.sweep.cells_per_period == 32

    def test_unknown_key(self):
        """Test that a misspelled key is reported with its dotted path."""
        with pytest.raises(ConfigError) as excinfo:
            parse_experiment('[geometry]\nmodel = "PeriodicLattice"\nradius = 0.25\nradious = 0.3\n')
        assert "geometry.PeriodicLattice.radious" in excinfo.value.detail
        assert excinfo.value.exit_code == 2

    def test_toml_syntax_error(self):
        """Test that malformed TOML is a config error."""
        with pytest.raises(ConfigError) as excinfo:
            parse_experiment("[geometry\nmodel = 1\n", source="broken.toml")
        assert excinfo.value.detail.startswith("broken.toml: invalid TOML")

    def test_missing_file(self, tmp_path):
        """Test that an unreadable file is a config error."""
        with pytest.raises(ConfigError):
            load_experiment(tmp_path / "absent.toml")

    def test_require(self, lattice_config_path):
        """Test that a subcommand can demand sections."""
        config = load_experiment(lattice_config_path)
        geometry, cell = config.require("geometry", "cell")
        assert geometry is config.geometry and cell is config.cell
        with pytest.raises(MissingSectionError) as excinfo:
            config.require("sweep")
        assert excinfo.value.section == "sweep"

    @pytest.mark.parametrize(
        "text",
        [
            "[extlab]\np = [2.0, 2.5]\n",
            "[sweep]\neps = [0.5, -0.25]\n",
            "[sweep]\neps = []\n",
            '[geometry]\nmodel = "ChessPercolation"\nmu = 1.2\nlattice_size = 8\n',
            '[geometry]\nmodel = "Voronoi"\n',
        ],
    )
    def test_invalid_values(self, text):
        """Test that out-of-range values are rejected."""
        with pytest.raises(ConfigError):
            parse_experiment(text)


# ============================================================================
# Tests: Settings and logging
# ============================================================================

class TestSettings:
    """Tests for environment settings."""

    def test_defaults(self, monkeypatch):
        """Test the default tolerances."""
        monkeypatch.delenv("DPLB_CG_TOL", raising=False)
        fresh = Settings(_env_file=None)
        assert fresh.CG_TOL == 1e-10
        assert fresh.MIN_CELLS_PER_DIAMETER == 8.0

    def test_env_override(self, monkeypatch):
        """Test that DPLB_ variables override the defaults."""
        monkeypatch.setenv("DPLB_THREADS", "3")
        assert Settings(_env_file=None).THREADS == 3

    def test_invalid_override(self, monkeypatch):
        """Test that a malformed override fails validation."""
        monkeypatch.setenv("DPLB_CG_TOL", "-1")
        with pytest.raises(ValidationError):
            Settings(_env_file=None)


class TestLogging:
    """Tests for the logging setup."""

    def test_level_applied(self):
        """Test that a valid level is set on the root logger."""
        configure_logging("warning")
        assert logging.getLogger().level == logging.WARNING

    def test_invalid_level_defaults_to_error(self):
        """Test that an unknown level falls back to ERROR."""
        configure_logging("verbose")
        assert logging.getLogger().level == logging.ERROR
