"""
nidc: neutral integrodifferential impulsive control

Numerical library and CLI for second-order non-autonomous neutral
integrodifferential systems with impulses: resolvent families on a time
grid, mild solutions by Picard iteration, and approximate-controllability
controls from the regularized controllability Gramian.

Architecture:
-----------
- model/: ProblemSpec, map registry, scenario configs, validation, hypothesis constants
- modal/: sine-mode Galerkin reduction and the wave-with-memory scenario
- resolvent/: time grids, resolvent family R(t, s), bounds, on-disk cache
- solver/: trajectories, the mild map, Picard iteration, reference integrator
- control/: Gramian, control synthesis, ε-sweeps
- pipeline/: stages and orchestrator behind the CLI commands
- io/: CSV tables

Usage:
------
from nidc import TimeGrid, build_resolvent_grid, picard_solve, assemble_gramian, synthesize_control
from nidc.model.config import load_scenario, build_spec

spec = build_spec(load_scenario("config/scenarios/scalar_steering.yaml"))
grid = TimeGrid.uniform(spec.horizon, 2e-3, spec.impulses.times)
res = build_resolvent_grid(spec, grid)
package = assemble_gramian(res, spec.b_op)
result = synthesize_control(spec, res, package, target=[1.0], eps=0.01)
"""

__version__ = "0.3.0"

from .control.gramian import assemble_gramian, regularized_resolvent, test_linear_controllability
from .control.sweep import epsilon_sweep
from .control.synthesis import compute_defect, synthesize_control
from .errors import ConfigError, DivergenceError, DomainError, NidcError
from .modal.basis import build_mode_basis, project_field, reconstruct_field
from .modal.scenario import build_wave_memory_scenario
from .model.hypotheses import check_existence_condition, estimate_constants
from .model.spec import HistoryFunction, ImpulseSchedule, ProblemSpec
from .model.validation import validate_spec
from .resolvent.bounds import verify_resolvent_bounds
from .resolvent.family import build_resolvent_grid, eval_dsR, eval_R
from .resolvent.grid import TimeGrid
from .solver.mild_map import evaluate_mild_map
from .solver.picard import picard_solve
from .solver.trajectory import apply_jump, segment_history

__all__ = [
    "ProblemSpec",
    "ImpulseSchedule",
    "HistoryFunction",
    "validate_spec",
    "estimate_constants",
    "check_existence_condition",
    "build_mode_basis",
    "build_wave_memory_scenario",
    "project_field",
    "reconstruct_field",
    "TimeGrid",
    "build_resolvent_grid",
    "eval_R",
    "eval_dsR",
    "verify_resolvent_bounds",
    "segment_history",
    "evaluate_mild_map",
    "picard_solve",
    "apply_jump",
    "assemble_gramian",
    "regularized_resolvent",
    "test_linear_controllability",
    "compute_defect",
    "synthesize_control",
    "epsilon_sweep",
    "NidcError",
    "ConfigError",
    "DomainError",
    "DivergenceError",
]
