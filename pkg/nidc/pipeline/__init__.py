"""
Stage pipeline behind the CLI commands.

Usage:
------
from nidc.pipeline import RunContext, run_command

context = run_command(RunContext(command="solve", config_path=Path("config/scenarios/free_wave.yaml"),
                                 out_dir=Path("runs/free_wave")))
"""

from .base import PipelineOrchestrator, PipelineStage, RunContext
from .stages import default_stages, run_command

__all__ = ["PipelineOrchestrator", "PipelineStage", "RunContext", "default_stages", "run_command"]
