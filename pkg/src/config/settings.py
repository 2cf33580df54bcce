"""Typed process settings loaded from environment variables and .env.

This module defines the `Settings` model, which centralizes configuration that is
not part of an experiment file: output location, thread count, solver tolerances and
the thresholds of the internal consistency checks. It relies on
`pydantic_settings.BaseSettings` to load and validate values from the environment
(prefix ``DPLB_``) or the `.env` file, so a malformed override fails at startup.
"""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    PROJECT_NAME: str = "dporolab"
    VERSION: str = "0.1.0"
    LOG_LEVEL: str = "INFO"

    OUT: str | None = None
    THREADS: int = Field(0, ge=0)

    CG_TOL: float = Field(1e-10, gt=0)
    CG_MAX_ITER: int = Field(20000, gt=0)
    CONSISTENCY_TOL: float = 1e-6
    IDENTITY_TOL: float = 1e-8

    RSA_BUDGET_FACTOR: int = 64
    MAX_RESAMPLE: int = 8
    MIN_CELLS_PER_DIAMETER: float = 8.0
    HARD_MIN_CELLS_PER_DIAMETER: float = 4.0
    BOUND_CONSTANT: float = 10.0

    model_config = SettingsConfigDict(
        env_prefix="DPLB_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


settings = Settings()
