"""
Pipeline stages behind the CLI commands.

    BuildSpec(10) → ValidateSpec(20) → Resolvent(30) → Hypotheses(40)
    → Solve(50) → Gramian(60) → Control(70) → Sweep(80) → Export(100)
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List

import numpy as np

from ..control.gramian import POSITIVE_VERDICT, assemble_gramian, default_probes, test_linear_controllability
from ..control.sweep import epsilon_sweep
from ..control.synthesis import synthesize_control
from ..errors import ConfigError, DivergenceError
from ..io import csv_export
from ..modal.basis import build_mode_basis, project_field
from ..model import registry
from ..model.config import MapBlock, build_control_signal, build_spec, load_scenario, scenario_hash
from ..model.hypotheses import check_existence_condition, estimate_constants
from ..model.validation import validation_report
from ..resolvent.cache import load_or_build
from ..resolvent.grid import TimeGrid
from ..solver.picard import picard_solve
from ..solver.trajectory import ControlSignal
from .base import PipelineOrchestrator, PipelineStage, RunContext
from .manifest import manifest_from_context, write_manifest

logger = logging.getLogger(__name__)

STEERABLE = "steerable"
NOT_STEERABLE = "not steerable"

# slack on the existence-condition lhs when compared with the observed contraction
CONTRACTION_MARGIN = 0.1


def _synthesis_options(context: RunContext) -> Dict[str, Any]:
    s = context.settings
    return {
        'tol_outer': s.outer_tol,
        'max_outer': s.outer_max_iter,
        'picard_tol': s.picard_tol,
        'picard_max_iter': s.picard_max_iter,
        'relaxation': s.outer_relaxation,
    }


def _epsilons(context: RunContext) -> List[float]:
    if context.eps_override is not None:
        return list(context.eps_override)
    return list(context.config.control.epsilons)


class BuildSpecStage(PipelineStage):
    """Load the scenario, resolve settings and build the ProblemSpec."""

    name = "BuildSpec"
    description = "Parse the scenario config and assemble the problem"
    priority = 10

    def run(self, context: RunContext) -> None:
        if context.config is None:
            context.config = load_scenario(context.config_path)
        context.settings = context.config.solver_settings(context.settings).merged(context.overrides)
        context.spec_hash = scenario_hash(context.config)
        context.spec = build_spec(context.config)
        logger.info(
            f"   Spec '{context.spec.name}': M={context.spec.state_dim}, ℓ={context.spec.horizon}, "
            f"{context.spec.impulses.count} impulses, hash {context.spec_hash[:12]}"
        )


class ValidateSpecStage(PipelineStage):
    """Structural checks; violations stop every command except validate."""

    name = "ValidateSpec"
    description = "Structural validation of the problem"
    priority = 20
    dependencies = ["BuildSpec"]
    requires = ["spec"]

    def run(self, context: RunContext) -> None:
        report = validation_report(context.spec, context.settings.rank_tol)
        context.validation = report
        context.violations = list(report['violations'])
        self.stats['violations'] = len(context.violations)

        if not context.violations:
            logger.info(f"   ✅ No structural violations (control rank {report['control_rank']}/{report['state_dim']})")
            return
        for v in context.violations:
            logger.warning(f"   ⚠️  {v['message']}" + (f" ({v['detail']})" if v['detail'] else ""))
        if context.command != "validate":
            raise ConfigError(f"scenario has {len(context.violations)} structural violation(s)")


class ResolventStage(PipelineStage):
    """Time grid plus resolvent family, read from the cache when possible."""

    name = "Resolvent"
    description = "Build the resolvent family on the time grid"
    priority = 30
    dependencies = ["ValidateSpec"]
    requires = ["spec"]

    def is_applicable(self, context: RunContext) -> bool:
        return super().is_applicable(context) and context.admissible

    def run(self, context: RunContext) -> None:
        spec = context.spec
        context.grid = TimeGrid.uniform(spec.horizon, context.settings.grid_step, spec.impulses.times)
        context.resolvent = load_or_build(
            spec, context.grid, cache_dir=context.settings.cache_dir, cap=context.settings.resolvent_cap
        )
        self.stats['nodes'] = context.grid.size


class HypothesesStage(PipelineStage):
    """Sampled hypothesis constants and the existence condition (informational)."""

    name = "Hypotheses"
    description = "Estimate hypothesis constants and evaluate the existence condition"
    commands = ["validate"]
    priority = 40
    dependencies = ["Resolvent"]
    requires = ["resolvent"]

    def run(self, context: RunContext) -> None:
        spec, s = context.spec, context.settings
        signal = build_control_signal(context.config, spec.control_dim)
        control = ControlSignal.from_function(context.grid, signal, spec.control_dim)
        context.hypotheses = estimate_constants(
            spec, context.grid, context.resolvent, s.probe_radius, level=s.probe_level, control=control
        )
        context.existence = check_existence_condition(context.hypotheses, spec, min_probes=s.min_probes)
        logger.info(f"   Existence condition: lhs={context.existence.lhs:.4g} -> {context.existence.verdict}")
        if context.existence.verdict == "holds":
            self._compare_contraction(context, control)

    def _compare_contraction(self, context: RunContext, control: ControlSignal) -> None:
        """Observed Picard contraction against the existence-condition lhs (logged only)."""
        s = context.settings
        try:
            _, report = picard_solve(
                context.spec, context.resolvent, control, tol=s.picard_tol, max_iter=s.picard_max_iter
            )
        except DivergenceError as e:
            logger.warning(f"   ⚠️  Condition holds but Picard iteration failed: {e}")
            return
        context.picard = report
        bound = context.existence.lhs + CONTRACTION_MARGIN
        self.stats['contraction'] = report.contraction_factor
        if report.contraction_factor > bound:
            logger.warning(
                f"   ⚠️  Observed contraction {report.contraction_factor:.3f} exceeds lhs + "
                f"{CONTRACTION_MARGIN} = {bound:.3f}"
            )
        else:
            logger.info(f"   Observed contraction {report.contraction_factor:.3f} <= {bound:.3f}")


class SolveStage(PipelineStage):
    """Mild solution for the open-loop control of the scenario."""

    name = "Solve"
    description = "Picard iteration for the mild solution"
    commands = ["solve"]
    priority = 50
    dependencies = ["Resolvent"]
    requires = ["resolvent"]

    def run(self, context: RunContext) -> None:
        spec, s = context.spec, context.settings
        signal = build_control_signal(context.config, spec.control_dim)
        context.control_signal = ControlSignal.from_function(context.grid, signal, spec.control_dim)
        context.trajectory, context.picard = picard_solve(
            spec, context.resolvent, context.control_signal, tol=s.picard_tol, max_iter=s.picard_max_iter
        )
        self.stats['iterations'] = context.picard.iterations


class GramianStage(PipelineStage):
    """Γ, its spectrum and the εV(ε, Γ) decay table."""

    name = "Gramian"
    description = "Assemble the controllability Gramian and test approximate controllability"
    commands = ["control", "sweep"]
    priority = 60
    dependencies = ["Resolvent"]
    requires = ["resolvent"]

    def run(self, context: RunContext) -> None:
        spec, s = context.spec, context.settings
        context.gramian = assemble_gramian(context.resolvent, spec.b_op)
        probes = default_probes(context.gramian, context.config.control.probe_count, context.config.control.probe_seed)
        context.controllability = test_linear_controllability(
            context.gramian, _epsilons(context), probes, decay_tol=s.decay_tol, rank_tol=s.rank_tol
        )
        logger.info(
            f"   Γ spectrum [{context.gramian.lambda_min:.4g}, {context.gramian.lambda_max:.4g}] "
            f"-> {context.controllability.verdict}"
        )


def resolve_target(context: RunContext) -> np.ndarray:
    """
    Target state b: 'free' (the uncontrolled endpoint), a vector, or for the
    wave scenario a field profile projected onto the modes.
    """
    spec, config = context.spec, context.config
    target = context.target_override if context.target_override is not None else config.control.target

    if isinstance(target, str):
        if target != "free":
            raise ConfigError(f"unknown target '{target}'", field="control.target")
        free, _ = picard_solve(
            spec, context.resolvent, None, tol=context.settings.picard_tol, max_iter=context.settings.picard_max_iter
        )
        return free.terminal()

    if isinstance(target, MapBlock):
        if config.model != "wave_memory":
            raise ConfigError("field targets need model 'wave_memory'", field="control.target")
        profile = registry.FIELD.build(target.kind, target.params, 1)
        return project_field(build_mode_basis(spec.state_dim), profile)

    return registry.as_vector(target, spec.state_dim, "control.target")


class ControlStage(PipelineStage):
    """Regularized control synthesis for one ε."""

    name = "Control"
    description = "Synthesize the control for the target"
    commands = ["control"]
    priority = 70
    dependencies = ["Gramian"]
    requires = ["gramian"]

    def run(self, context: RunContext) -> None:
        context.target = resolve_target(context)
        eps = context.eps_override[0] if context.eps_override else context.config.control.epsilon
        context.synthesis = synthesize_control(
            context.spec, context.resolvent, context.gramian, context.target, eps, **_synthesis_options(context)
        )
        context.trajectory = context.synthesis.trajectory
        context.control_signal = context.synthesis.control


class SweepStage(PipelineStage):
    """Control synthesis over a decreasing ε list."""

    name = "Sweep"
    description = "ε-sweep of the control synthesis"
    commands = ["sweep"]
    priority = 80
    dependencies = ["Gramian"]
    requires = ["gramian"]

    def run(self, context: RunContext) -> None:
        context.target = resolve_target(context)
        context.sweep = epsilon_sweep(
            context.spec,
            context.resolvent,
            context.gramian,
            context.target,
            _epsilons(context),
            **_synthesis_options(context),
        )


class ExportStage(PipelineStage):
    """Manifest first, then the CSV tables of the command."""

    name = "Export"
    description = "Write manifest, report and CSV outputs"
    priority = 100
    dependencies = ["BuildSpec"]

    def is_applicable(self, context: RunContext) -> bool:
        return super().is_applicable(context) and context.out_dir is not None

    def _planned(self, context: RunContext) -> List[str]:
        planned = []
        if context.command == "validate":
            planned.append("validation.json")
        if context.trajectory is not None:
            planned.append("trajectory.csv")
        if context.control_signal is not None and context.command != "validate":
            planned.append("control.csv")
        if context.synthesis is not None:
            planned.append("summary.csv")
        if context.sweep is not None:
            planned.append("sweep.csv")
        if context.controllability is not None:
            planned.append("decay.csv")
        return planned

    def run(self, context: RunContext) -> None:
        out: Path = context.out_dir
        planned = self._planned(context)
        write_manifest(manifest_from_context(context, planned), out)

        for name in planned:
            path = out / name
            if name == "validation.json":
                self._write_validation(context, path)
            elif name == "trajectory.csv":
                csv_export.write_trajectory(context.trajectory, path)
            elif name == "control.csv":
                csv_export.write_control(context.control_signal, path)
            elif name == "summary.csv":
                verdict = STEERABLE if context.controllability.verdict == POSITIVE_VERDICT else NOT_STEERABLE
                csv_export.write_summary(context.synthesis, verdict, path)
            elif name == "sweep.csv":
                csv_export.write_sweep(context.sweep, path)
            elif name == "decay.csv":
                csv_export.write_decay(context.controllability, path)
            context.outputs[name] = str(path)

        status = "failed" if context.errors else "complete"
        write_manifest(manifest_from_context(context, planned, status=status), out)

    @staticmethod
    def _write_validation(context: RunContext, path: Path) -> None:
        report: Dict[str, Any] = dict(context.validation or {})
        if context.hypotheses is not None:
            report['hypotheses'] = context.hypotheses.model_dump()
        if context.existence is not None:
            report['existence'] = context.existence.model_dump()
        with open(path, 'w') as f:
            json.dump(report, f, indent=2)
        logger.info(f"💾 Wrote report: {path.name}")


def default_stages() -> List[PipelineStage]:
    return [
        BuildSpecStage(),
        ValidateSpecStage(),
        ResolventStage(),
        HypothesesStage(),
        SolveStage(),
        GramianStage(),
        ControlStage(),
        SweepStage(),
        ExportStage(),
    ]


def run_command(context: RunContext) -> RunContext:
    """Run the default pipeline for context.command."""
    orchestrator = PipelineOrchestrator(default_stages(), halt_on_error=context.settings.halt_on_error)
    orchestrator.run(context)
    return context
