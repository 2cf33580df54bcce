import numpy as np
import pytest

from src.app.context import RunOptions
from src.config import settings
from src.models import Grid, InclusionModel, InclusionSet, IndicatorGrid
from src.modules.cell.service import compute_homogenized_data
from src.modules.geometry.service import rasterize, sample_periodic_lattice


LATTICE_TOML = """
name = "lattice"

[geometry]
model = "PeriodicLattice"
radius = 0.25

[cell]
resolution = 16
flux_correctors = true
"""


@pytest.fixture(autouse=True)
def no_output_override(monkeypatch):
    # DPLB_OUT from the developer's shell must not redirect test outputs
    monkeypatch.setattr(settings, "OUT", None)


@pytest.fixture
def disc_lattice():
    """One disc of radius 1/4 per unit cell."""
    return sample_periodic_lattice(0.25)


@pytest.fixture
def disc_indicator(disc_lattice):
    return rasterize(disc_lattice, 32)


@pytest.fixture
def empty_set():
    return InclusionSet(model=InclusionModel.CUSTOM, period=1.0, dim=2)


@pytest.fixture
def empty_indicator():
    grid = Grid(16, 2, 1.0)
    return IndicatorGrid(cells=np.zeros(grid.shape, dtype=bool), grid=grid)


@pytest.fixture(scope="session")
def lattice_hd():
    """Cell data of the disc lattice at 16 cells per period (no flux correctors)."""
    chi = rasterize(sample_periodic_lattice(0.25), 16)
    return compute_homogenized_data(chi, threads=1, with_flux=False)


@pytest.fixture
def options(tmp_path):
    return RunOptions(out=tmp_path / "out", threads=1)


@pytest.fixture
def lattice_config_path(tmp_path):
    path = tmp_path / "lattice.toml"
    path.write_text(LATTICE_TOML, encoding="utf-8")
    return path
