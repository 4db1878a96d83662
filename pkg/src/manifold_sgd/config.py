"""Configuration management.

Settings are read from ``MANIFOLD_SGD_*`` environment variables. Keyword
arguments passed to individual functions always take precedence.
"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

Precision = Literal["single", "double"]


class Settings(BaseSettings):
    """Library-wide numerical and runtime settings."""

    model_config = SettingsConfigDict(env_prefix="MANIFOLD_SGD_", frozen=True)

    # Numerics
    precision: Precision = "double"
    eig_method: Literal["eigh", "jacobi"] = "eigh"
    jacobi_max_sweeps: int = Field(100, ge=1)
    membership_tol_double: float = Field(1e-8, gt=0)
    membership_tol_single: float = Field(1e-4, gt=0)
    eig_floor: float = Field(1e-5, gt=0)
    ball_eps_double: float = Field(1e-5, gt=0, lt=1)
    ball_eps_single: float = Field(4e-3, gt=0, lt=1)

    # Logging
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "INFO"
    log_enabled: bool = True
    rich_tracebacks: bool = True

    # Storage
    runs_dir: Path = Field(default_factory=lambda: Path.home() / ".manifold-sgd" / "runs")

    def dtype(self, precision: Precision | None = None) -> np.dtype:
        """Numpy dtype for a precision name (defaults to ``self.precision``)."""
        return np.dtype(np.float32 if (precision or self.precision) == "single" else np.float64)

    def membership_tol(self, dtype: np.dtype | type) -> float:
        """Default membership tolerance for arrays of ``dtype``."""
        if np.dtype(dtype) == np.float32:
            return self.membership_tol_single
        return self.membership_tol_double

    def ball_eps(self, dtype: np.dtype | type) -> float:
        """Poincaré ball boundary margin for arrays of ``dtype``."""
        if np.dtype(dtype) == np.float32:
            return self.ball_eps_single
        return self.ball_eps_double


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Process-wide settings instance."""
    return Settings()
