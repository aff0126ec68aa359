"""Run manifest: written before any CSV, rewritten once the outputs exist."""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from .. import __version__
from .base import RunContext

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class RunManifest(BaseModel):
    """What was run, with which settings, and which files it produced."""

    command: str
    config_path: Optional[str] = None
    out_dir: str
    spec_hash: Optional[str] = None
    resolvent_hash: Optional[str] = None
    settings: Dict[str, Any] = Field(default_factory=dict)
    grid: Dict[str, Any] = Field(default_factory=dict)
    planned_outputs: List[str] = Field(default_factory=list)
    timings: Dict[str, float] = Field(default_factory=dict)
    status: str = "running"
    created_at: str = Field(default_factory=lambda: datetime.now().isoformat(timespec="seconds"))
    nidc_version: str = __version__


def manifest_from_context(context: RunContext, planned: List[str], status: str = "running") -> RunManifest:
    grid: Dict[str, Any] = {}
    if context.grid is not None:
        grid = {
            'nodes': int(context.grid.size),
            'horizon': float(context.grid.horizon),
            'step_max': float(context.grid.step_max),
            'impulse_nodes': sorted(context.grid.impulse_index.values()),
        }
    return RunManifest(
        command=context.command,
        config_path=str(context.config_path) if context.config_path else None,
        out_dir=str(context.out_dir),
        spec_hash=context.spec_hash,
        resolvent_hash=getattr(context.resolvent, 'content_hash', None),
        settings=context.settings.model_dump(),
        grid=grid,
        planned_outputs=list(planned),
        timings={k: round(v, 6) for k, v in context.timings.items()},
        status=status,
    )


def write_manifest(manifest: RunManifest, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / MANIFEST_NAME
    with open(path, 'w') as f:
        json.dump(manifest.model_dump(), f, indent=2)
    logger.info(f"💾 Manifest: {path}")
    return path
