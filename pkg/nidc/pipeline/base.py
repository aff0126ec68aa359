"""
Base classes for the command pipelines.

Every CLI command is a priority-ordered run of PipelineStage objects that
share one RunContext. A stage declares the commands it serves and the
context attributes it needs; the orchestrator sorts stages, checks the
declared dependencies, skips stages that do not apply and records a
wall-clock timing per stage.
"""

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from ..errors import NidcError
from ..settings import SolverSettings

logger = logging.getLogger(__name__)

Command = Literal['validate', 'solve', 'control', 'sweep']


@dataclass
class RunContext:
    """
    State shared by the stages of one command run.

    Inputs are filled by the CLI; every other attribute is produced by a stage.
    """

    # Inputs
    command: Command
    config_path: Optional[Path] = None
    out_dir: Optional[Path] = None
    settings: SolverSettings = field(default_factory=SolverSettings)
    overrides: Dict[str, Any] = field(default_factory=dict)
    target_override: Optional[Union[Literal['free'], List[float]]] = None
    eps_override: Optional[List[float]] = None

    # Built by stages
    config: Any = None
    spec: Any = None
    spec_hash: Optional[str] = None
    grid: Any = None
    resolvent: Any = None
    violations: List[Any] = field(default_factory=list)
    validation: Optional[Dict[str, Any]] = None
    hypotheses: Any = None
    existence: Any = None
    control_signal: Any = None
    trajectory: Any = None
    picard: Any = None
    gramian: Any = None
    controllability: Any = None
    target: Any = None
    synthesis: Any = None
    sweep: Any = None

    # Bookkeeping
    timings: Dict[str, float] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    errors: List[NidcError] = field(default_factory=list)

    @property
    def admissible(self) -> bool:
        return self.spec is not None and not self.violations


class PipelineStage(ABC):
    """
    Abstract base class for all pipeline stages.

    Each stage:
    - Serves a set of commands ("all" for every command)
    - Declares the context attributes it needs (`requires`)
    - Collects statistics about its run
    """

    name: str = "BaseStage"
    description: str = "Base pipeline stage"
    commands: List[str] = ["all"]
    priority: int = 50  # lower runs earlier
    dependencies: List[str] = []  # stage names that must be in the pipeline
    requires: List[str] = []  # RunContext attributes that must be set
    version: str = "1.0.0"

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        self.config = config or {}
        self.stats: Dict[str, Any] = {'runs': 0, 'error_count': 0}
        self.enabled = self.config.get('enabled', True)

    @abstractmethod
    def run(self, context: RunContext) -> None:
        """Read inputs from and write results into the context."""

    def is_applicable(self, context: RunContext) -> bool:
        if not self.enabled:
            return False
        if "all" not in self.commands and context.command not in self.commands:
            return False
        return all(getattr(context, attr, None) is not None for attr in self.requires)

    def validate_dependencies(self, available_stages: List[str]) -> bool:
        return all(dep in available_stages for dep in self.dependencies)

    def get_summary(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'version': self.version,
            'stats': self.stats.copy(),
        }

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(name='{self.name}', priority={self.priority})"


class PipelineOrchestrator:
    """
    Runs stages in priority order.

    With halt_on_error the first NidcError propagates; otherwise it is
    recorded in context.errors and later stages whose inputs are missing
    are skipped.
    """

    def __init__(self, stages: List[PipelineStage], halt_on_error: bool = True):
        self.stages = stages
        self.halt_on_error = halt_on_error
        self.pipeline_stats: Dict[str, Any] = {}

    def _sorted_stages(self) -> List[PipelineStage]:
        return sorted(self.stages, key=lambda s: s.priority)

    def _validate_pipeline(self) -> Tuple[bool, List[str]]:
        errors = []
        names = [s.name for s in self.stages]
        for stage in self.stages:
            if not stage.validate_dependencies(names):
                missing = [dep for dep in stage.dependencies if dep not in names]
                errors.append(f"Stage '{stage.name}' missing dependencies: {missing}")
        return len(errors) == 0, errors

    def run(self, context: RunContext) -> Dict[str, Any]:
        """
        Run the pipeline on the context.

        Returns:
            pipeline_stats with stages_run, stages_skipped and per-stage summaries

        Raises:
            ValueError: unsatisfied stage dependencies
            NidcError: first stage failure when halt_on_error is set
        """
        is_valid, errors = self._validate_pipeline()
        if not is_valid:
            for error in errors:
                logger.error(f"  - {error}")
            raise ValueError("Pipeline validation failed. See logs for details.")

        ordered = self._sorted_stages()
        self.pipeline_stats = {'stages_run': [], 'stages_skipped': [], 'stage_stats': {}}

        logger.info(f"🚀 Running '{context.command}' pipeline with {len(ordered)} stages...")
        for i, stage in enumerate(ordered, 1):
            if not stage.is_applicable(context):
                logger.debug(f"  {i}/{len(ordered)}: Skipping {stage.name}")
                self.pipeline_stats['stages_skipped'].append(stage.name)
                continue

            logger.info(f"  {i}/{len(ordered)}: {stage.name}...")
            started = time.perf_counter()
            try:
                stage.run(context)
                stage.stats['runs'] += 1
                self.pipeline_stats['stages_run'].append(stage.name)
            except NidcError as e:
                stage.stats['error_count'] += 1
                context.errors.append(e)
                logger.error(f"  ❌ Error in {stage.name}: {e}")
                if self.halt_on_error:
                    raise
            finally:
                context.timings[stage.name] = time.perf_counter() - started
            self.pipeline_stats['stage_stats'][stage.name] = stage.get_summary()

        logger.info(
            f"✅ Pipeline complete: {len(self.pipeline_stats['stages_run'])} run, "
            f"{len(self.pipeline_stats['stages_skipped'])} skipped, {len(context.errors)} errors"
        )
        return self.pipeline_stats
