"""Configuration records and the YAML config loader.

Defaults live in ``config.yaml`` at the repository root; every field also has
a built-in default so the library works without the file.
"""

import logging
import os
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from sleap.errors import ConfigurationError

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent.parent / "config.yaml"

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class SolverConfig(BaseModel):
    """Tuning parameters shared by all leap solvers."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    epsilon: float = Field(0.03, gt=0.0, lt=1.0)
    n_critical: int = Field(10, ge=0)
    theta: float = Field(0.1, ge=0.0, le=1.0)
    delta: float = Field(0.05, gt=0.0)
    reorder_period: int = Field(10000, ge=1)
    stiffness_factor: float = Field(100.0, gt=0.0)
    ssa_fallback: bool = True
    ssa_fallback_threshold: float = Field(10.0, ge=0.0)
    ssa_burst: int = Field(100, ge=1)
    negative_control: bool = False
    retry_cap: int = Field(30, ge=1)
    l_max: int = Field(1_000_000, ge=1)
    newton_tol: float = Field(1e-6, gt=0.0)
    newton_max_iter: int = Field(100, ge=1)


class AnalysisConfig(BaseModel):
    """Ensemble sizes and histogram settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_samples: int = Field(10000, ge=2)
    bins: int = Field(10, ge=2)
    grid_points: int = Field(25, ge=1)
    repetitions: int = Field(10, ge=1)
    jobs: int = Field(1, ge=1)


def build_solver_config(values: dict[str, Any] | None = None, **overrides) -> SolverConfig:
    """Validate solver settings, merging keyword overrides over ``values``.

    Raises:
        ConfigurationError: when a field is unknown or violates its bounds

    """
    merged = dict(values or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return SolverConfig(**merged)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid solver configuration: {e}") from e


def build_analysis_config(
    values: dict[str, Any] | None = None, **overrides,
) -> AnalysisConfig:
    """Validate analysis settings; same contract as build_solver_config."""
    merged = dict(values or {})
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return AnalysisConfig(**merged)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid analysis configuration: {e}") from e


def load_config(path: str | Path | None = None) -> dict:
    """Load and validate the YAML configuration.

    A missing default file yields an empty configuration (built-in defaults
    apply); a missing explicitly requested file is an error.

    Raises:
        ConfigurationError: unreadable file, bad YAML, or invalid sections

    """
    config_path = Path(path) if path is not None else DEFAULT_CONFIG_PATH
    try:
        with open(config_path, encoding="utf-8") as f:
            config = yaml.safe_load(f) or {}
    except FileNotFoundError as e:
        if path is None:
            return {}
        raise ConfigurationError(f"Configuration file not found: {config_path}") from e
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Invalid YAML in {config_path}: {e}") from e

    if not isinstance(config, dict):
        raise ConfigurationError("Invalid configuration: top level must be a mapping")

    # Validate the sections we own; unknown keys inside them are errors
    build_solver_config(config.get("solver"))
    build_analysis_config(config.get("analysis"))

    return config


def setup_logging(level: str | int | None = None, config: dict | None = None) -> None:
    """Configure root logging once for an entry point.

    Precedence: explicit ``level``, then ``LOG_LEVEL`` env, then
    ``logging.level`` in the config, then INFO.
    """
    if level is None:
        level = os.environ.get("LOG_LEVEL")
    if level is None and config:
        level = config.get("logging", {}).get("level")
    if level is None:
        level = "INFO"
    if isinstance(level, str):
        level = level.upper()
    logging.basicConfig(level=level, format=LOG_FORMAT)


__all__ = [
    "AnalysisConfig",
    "SolverConfig",
    "build_analysis_config",
    "build_solver_config",
    "load_config",
    "setup_logging",
]
