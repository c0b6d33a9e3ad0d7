"""Configuration management using Pydantic Settings.

Every numeric default and tolerance used by the verifications lives here, so a
report can print the exact values it ran with. Values load from the
environment (prefix ``LSI_FORGE_``) or a ``.env`` file.
"""

from __future__ import annotations

from contextlib import contextmanager
from functools import lru_cache
from typing import Any, Dict, Iterator, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Tolerances(BaseModel):
    """Tolerance record shared by all numerical modules."""

    model_config = ConfigDict(frozen=True)

    dft: float = Field(default=1e-12, description="DFT / split agreement", gt=0)
    imaginary: float = Field(default=1e-12, description="Max imaginary residue before realification", gt=0)
    symmetry: float = Field(default=1e-12, description="Matrix symmetry check", gt=0)
    kkt_residual: float = Field(default=1e-9, description="Residual norm accepted as a KKT solution", gt=0)
    kkt_dedup: float = Field(default=1e-6, description="Distance under which two solutions coincide", gt=0)
    complementarity: float = Field(default=1e-9, description="Bound on |lambda_j nu_j|", gt=0)
    window_floor: float = Field(
        default=1e-2,
        description="Searched norms satisfy ||lambda||^2 >= window_floor * n",
        gt=0,
        lt=1,
    )
    window_margin: float = Field(
        default=1e-2,
        description="Searched norms satisfy ||lambda||^2 <= (1 - window_margin) * n",
        gt=0,
        lt=1,
    )
    slack: float = Field(default=1e-9, description="Absolute slack tolerance on inequalities", gt=0)
    relation: float = Field(default=1e-5, description="Relative tolerance for derivative relations", gt=0)
    zero_at_one: float = Field(default=1e-8, description="Values at x=1 treated as zero below this", gt=0)
    positive_at_one: float = Field(default=1e-10, description="Values at x=1 treated as positive above this", gt=0)
    contractive: float = Field(default=1e-7, description="Ratio excess still counted as contractive", gt=0)
    bisection_width: float = Field(default=1e-3, description="Final bracket width in time bisection", gt=0)
    series_band: float = Field(
        default=5e-2,
        description="Taylor expansion replaces closed forms for |x - 1| below this",
        gt=0,
        lt=0.5,
    )
    sphere_norm: float = Field(default=1e-9, description="Allowed deviation of ||lambda|| from 1", gt=0)


class Settings(BaseSettings):
    """Toolkit settings with validation.

    All settings can be configured via environment variables or .env file.
    """

    # Execution
    threads: int = Field(
        default=1,
        description="Worker pool size (LSI_FORGE_THREADS)",
        ge=1,
        le=256,
    )
    seed: int = Field(default=0, description="Root seed for every stochastic search", ge=0)

    # Logging Configuration
    log_level: str = Field(
        default="INFO",
        description="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)",
    )

    # Search sizes
    samples: int = Field(default=100_000, description="Monte-Carlo sample count", ge=1)
    starts: int = Field(default=256, description="Default multi-start count", ge=1)
    sphere_starts: int = Field(default=512, description="Starts for projected-gradient minimization", ge=1)
    kkt_starts: int = Field(default=1000, description="Starts for the KKT residual search", ge=1)
    hyper_starts: int = Field(default=64, description="Inner starts per bisection time", ge=1)
    resolution: int = Field(default=201, description="Grid points per r-axis", ge=50)
    cascade_samples: int = Field(default=10_000, description="Grid points for the auxiliary chains", ge=100)
    cascade_x_max: float = Field(default=50.0, description="Right end of the auxiliary-chain grid", gt=1)
    quadratic_x_max: float = Field(default=100.0, description="Right end of the x grid in quadratic scans", gt=0)
    max_iterations: int = Field(default=4000, description="Iteration cap for projected gradient descent", ge=10)

    tolerances: Tolerances = Field(default_factory=Tolerances)

    model_config = SettingsConfigDict(
        env_prefix="LSI_FORGE_",
        env_file=".env",
        env_file_encoding="utf-8",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level is valid."""
        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        v_upper = v.upper()
        if v_upper not in valid_levels:
            raise ValueError(f"Invalid log level: {v}. Must be one of {valid_levels}")
        return v_upper

    def with_overrides(self, **overrides: Any) -> "Settings":
        """Return a validated copy with the given fields replaced.

        ``tol`` is accepted as shorthand and applied to the slack and KKT
        residual tolerances.
        """
        overrides = {k: v for k, v in overrides.items() if v is not None}
        tol = overrides.pop("tol", None)
        data = self.model_dump()
        data.update(overrides)
        if tol is not None:
            data["tolerances"] = {**data["tolerances"], "slack": tol, "kkt_residual": tol}
        return Settings.model_validate(data)

    def provenance(self) -> Dict[str, Any]:
        """Numeric defaults embedded into every report."""
        return self.model_dump(exclude={"log_level"})


_active: Optional[Settings] = None


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance.

    Returns:
        Settings: Validated toolkit settings

    Raises:
        ValidationError: If settings validation fails
    """
    return Settings()


def current_settings() -> Settings:
    """Settings in effect for the running command (overrides win over the environment)."""
    return _active or get_settings()


@contextmanager
def use_settings(overridden: Settings) -> Iterator[Settings]:
    """Make ``overridden`` the active settings for the duration of a run."""
    global _active
    previous, _active = _active, overridden
    try:
        yield overridden
    finally:
        _active = previous

