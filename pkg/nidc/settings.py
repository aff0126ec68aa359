"""
Solver settings

Loads config/solver_defaults.yaml into a validated SolverSettings model.
Scenario configs and CLI flags layer their overrides on top via
SolverSettings.merged().
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

DEFAULTS_PATH = Path(__file__).parent.parent / "config" / "solver_defaults.yaml"


class SolverSettings(BaseModel):
    """Numerical knobs shared by every pipeline stage."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    grid_step: float = Field(default=2e-3, gt=0.0)
    picard_tol: float = Field(default=1e-10, gt=0.0)
    picard_max_iter: int = Field(default=200, ge=1)
    outer_tol: float = Field(default=1e-9, gt=0.0)
    outer_max_iter: int = Field(default=100, ge=1)
    outer_relaxation: float = Field(default=1.0, gt=0.0, le=1.0)
    resolvent_cap: float = Field(default=1e8, gt=0.0)
    probe_radius: float = Field(default=10.0, gt=0.0)
    probe_level: int = Field(default=3, ge=0, le=10)
    min_probes: int = Field(default=8, ge=1)
    decay_tol: float = Field(default=0.1, gt=0.0)
    rank_tol: float = Field(default=1e-10, gt=0.0)
    halt_on_error: bool = True
    cache_dir: Optional[str] = None

    def merged(self, overrides: Optional[Dict[str, Any]]) -> "SolverSettings":
        """Return a copy with non-None overrides applied (re-validated)."""
        if not overrides:
            return self
        data = self.model_dump()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return SolverSettings(**data)


def load_solver_settings(path: Optional[Path] = None) -> SolverSettings:
    """
    Load solver defaults from YAML.

    Falls back to the built-in defaults when the file is missing or broken,
    then applies NIDC_CACHE_DIR from the environment.

    Args:
        path: Optional alternative defaults file

    Returns:
        SolverSettings instance
    """
    config_path = path or DEFAULTS_PATH
    settings = SolverSettings()

    if not config_path.exists():
        logger.warning(f"Solver defaults not found: {config_path}")
        logger.warning("Using built-in solver defaults")
    else:
        try:
            with open(config_path, 'r') as f:
                raw = yaml.safe_load(f) or {}
            settings = SolverSettings(**raw)
            logger.debug(f"✅ Loaded solver defaults from: {config_path.name}")
        except Exception as e:
            logger.error(f"Failed to load solver defaults: {e}")
            logger.warning("Using built-in solver defaults")

    env_cache = os.getenv("NIDC_CACHE_DIR")
    if env_cache:
        settings = settings.merged({'cache_dir': env_cache})

    return settings
