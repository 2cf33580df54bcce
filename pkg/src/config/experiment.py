"""Experiment files.

An experiment is one TOML file holding the geometry, resolutions, eps lists and seeds
of a run. Every section is optional; each subcommand asks for the ones it needs with
`ExperimentConfig.require`. Unknown keys are rejected so a typo never silently falls
back to a default.

    [geometry]
    model = "PeriodicLattice"
    radius = 0.25

    [sweep]
    eps = [0.125, 0.0625, 0.03125]
    cells_per_period = 32
"""

import logging
import tomllib
from enum import Enum
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.modules.dporosity.schemas import Domain
from src.modules.geometry.schemas import FixedRadius, RasterRule, UniformRadius
from .exceptions import ConfigError, MissingSectionError

logger = logging.getLogger(__name__)

RadiusLawConfig = Annotated[Union[FixedRadius, UniformRadius], Field(discriminator="law")]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LatticeGeometry(StrictModel):
    model: Literal["PeriodicLattice"]
    radius: float = Field(..., gt=0)
    period: float = Field(1.0, gt=0)
    dim: int = Field(2, ge=1, le=3)


class RsaGeometry(StrictModel):
    model: Literal["HardDiscsRSA"]
    intensity: float = Field(..., gt=0)
    radius: RadiusLawConfig
    separation_margin: float = Field(0.0, ge=0)
    period: float = Field(1.0, gt=0)
    seed: int = 0
    dim: int = Field(2, ge=1, le=3)
    target_count: Optional[int] = Field(None, ge=1)


class HalfGapGeometry(StrictModel):
    model: Literal["PoissonHalfGap"]
    intensity: float = Field(..., gt=0)
    period: float = Field(1.0, gt=0)
    seed: int = 0
    dim: int = Field(2, ge=1, le=3)


class ChessGeometry(StrictModel):
    model: Literal["ChessPercolation"]
    mu: float = Field(..., gt=0, lt=1)
    lattice_size: int = Field(..., ge=2)
    seed: int = 0


class CapsuleGeometry(StrictModel):
    model: Literal["RandomCapsules"]
    intensity: float = Field(..., gt=0)
    length: RadiusLawConfig = Field(..., description="Law of the capsule half-lengths")
    width: float = Field(..., gt=0)
    separation: float = Field(0.0, ge=0)
    period: float = Field(1.0, gt=0)
    seed: int = 0
    dim: int = Field(2, ge=2, le=3)
    target_count: Optional[int] = Field(None, ge=1)


GeometryConfig = Annotated[
    Union[LatticeGeometry, RsaGeometry, HalfGapGeometry, ChessGeometry, CapsuleGeometry],
    Field(discriminator="model"),
]


class SourceKind(str, Enum):
    """Right-hand sides available to the solve and sweep subcommands."""
    ONE = "one"
    SINE = "sine"
    BUMP = "bump"


class CellConfig(StrictModel):
    resolution: int = Field(64, ge=4)
    rule: RasterRule = RasterRule.CENTER
    flux_correctors: bool = True
    alpha: float = Field(1.0, gt=0, description="Exponent of the separation moment")
    beta: Optional[float] = Field(None, gt=0)
    massive_eps: list[float] = Field(default_factory=list, description="eps values of the massive corrector check")
    dirichlet_correctors: bool = Field(False, description="Add the Dirichlet box correctors to the massive table")


class SolveConfig(StrictModel):
    eps: float = Field(..., gt=0)
    resolution: int = Field(..., ge=4)
    domain: Domain = Domain()
    source: SourceKind = SourceKind.ONE


class SweepConfig(StrictModel):
    eps: list[float] = Field(..., min_length=1)
    cells_per_period: int = Field(32, ge=4)
    domain: Domain = Domain()
    source: SourceKind = SourceKind.ONE
    smoothing: Optional[float] = Field(None, gt=0, description="Mollifier width in units of eps")
    coupled: bool = False
    realizations: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _positive_eps(self):
        if any(e <= 0 for e in self.eps):
            raise ValueError("eps values must be positive")
        return self


class ExtlabConfig(StrictModel):
    p: list[float] = Field(default_factory=lambda: [2.0, 4.0 / 3.0, 1.2])
    resolutions: list[int] = Field(default_factory=lambda: [256, 512], min_length=1)
    samples: int = Field(16, ge=1)
    seed: int = 0
    stability_eps: list[float] = Field(default_factory=list, description="eps values of the extension stability check")
    stability_cells: int = Field(16, ge=4, description="Grid cells per period in the stability check")

    @model_validator(mode="after")
    def _exponents(self):
        if any(not 1.0 <= p <= 2.0 for p in self.p):
            raise ValueError("exponents p must lie in [1, 2]")
        return self


class EnsembleConfig(StrictModel):
    realizations: int = Field(..., ge=1)
    base_seed: int = Field(0, ge=0)
    copies: int = Field(1, ge=1, description="Cell period L in units of the model period")
    resolution: int = Field(64, ge=4, description="Grid cells per model period")
    seeds: Optional[list[int]] = Field(None, description="Explicit per-realization seeds")
    periods: list[int] = Field(default_factory=lambda: [1, 2])
    quantity: Literal["vol_frac", "mean_v"] = "vol_frac"


class ExperimentConfig(StrictModel):
    name: str = "experiment"
    geometry: Optional[GeometryConfig] = None
    cell: Optional[CellConfig] = None
    solve: Optional[SolveConfig] = None
    sweep: Optional[SweepConfig] = None
    extlab: Optional[ExtlabConfig] = None
    ensemble: Optional[EnsembleConfig] = None

    def require(self, *sections: str):
        for section in sections:
            if getattr(self, section) is None:
                raise MissingSectionError(section)
        values = tuple(getattr(self, section) for section in sections)
        return values[0] if len(values) == 1 else values


def _describe(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        path = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{path}: {item['msg']}")
    return "; ".join(lines)


def parse_experiment(text: str, source: str = "<string>") -> ExperimentConfig:
    """Parse and validate TOML text; errors carry the line/column or the field path."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{source}: invalid TOML: {e}") from e
    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise ConfigError(f"{source}: {_describe(e)}") from e
    logger.debug(f"Loaded experiment {config.name!r} from {source}")
    return config


def load_experiment(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Cannot read experiment file {path}: {e.strerror}") from e
    return parse_experiment(text, str(path))
