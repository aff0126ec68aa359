"""
Control synthesis with the regularized Gramian.

    u(t) = βᵀ R(ℓ, t)ᵀ V(ε, Γ) p(ϑ)

where the terminal defect p(ϑ) is the target minus every non-control
contribution to ϑ(ℓ) in the mild formula. The fixed point in ϑ is found by
nesting a Picard solve inside a control-update loop. Γ, p and the mild-map
convolution share one trapezoid rule, so a converged synthesis satisfies

    ϑ(ℓ) = b - εV(ε, Γ) p(ϑ)

up to the iteration tolerances.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..errors import DomainError, OuterLoopDivergenceError
from ..model.spec import ProblemSpec
from ..resolvent.family import ResolventGrid
from ..solver.mild_map import convolution_weights, forcing_samples, neutral_velocity
from ..solver.picard import PicardReport, picard_solve
from ..solver.trajectory import ControlSignal, Trajectory, segment_history
from .gramian import GramianPackage, RegularizedResolvent, regularized_resolvent

logger = logging.getLogger(__name__)


@dataclass
class ControlSynthesis:
    """Converged control u_ε and the resulting terminal quantities."""

    epsilon: float
    control: ControlSignal
    defect: np.ndarray
    terminal_error: float
    outer_iterations: int
    trajectory: Trajectory
    target: np.ndarray
    identity_residual: float = 0.0
    outer_distances: List[float] = field(default_factory=list)
    picard: Optional[PicardReport] = None

    @property
    def control_energy(self) -> float:
        return self.control.energy()

    def summary(self) -> dict:
        return {
            'epsilon': self.epsilon,
            'terminal_error': self.terminal_error,
            'control_energy': self.control_energy,
            'outer_iterations': self.outer_iterations,
            'identity_residual': self.identity_residual,
            'defect_norm': float(np.linalg.norm(self.defect)),
        }


def compute_defect(
    spec: ProblemSpec,
    res: ResolventGrid,
    traj: Trajectory,
    target: np.ndarray,
) -> np.ndarray:
    """
    p(ϑ) = b + ∂R/∂s(ℓ, 0)[Φ(0) + £₂(0, Φ)] - R(ℓ, 0)[x¹ + y¹] + £₂(ℓ, ϑ_ℓ)
           - ∫₀^ℓ R(ℓ, s) £₁(s, ϑ(s)) ds
           + Σ ∂R/∂s(ℓ, t_q) I_q(ϑ(t_q⁻)) - Σ R(ℓ, t_q) J_q(ϑ(t_q⁻))
    """
    grid = res.grid
    last = grid.size - 1
    horizon = grid.horizon
    target = np.asarray(target, dtype=float)

    e0 = spec.initial_state() + np.asarray(spec.f2(0.0, spec.initial_segment()), dtype=float)
    y1 = neutral_velocity(spec, res)

    p = target + res.node_matrix("dsR", last, 0) @ e0
    p = p - res.node_matrix("R", last, 0) @ (spec.v0 + y1)
    p = p + np.asarray(spec.f2(horizon, segment_history(traj, spec.history, horizon)), dtype=float)

    weights = convolution_weights(res)
    g = forcing_samples(spec, traj, ControlSignal.zeros(grid, spec.control_dim))
    p = p - res.row_apply("R", last, weights['after'][last], g['after'])
    p = p - res.row_apply("R", last, weights['before'][last], g['before'])

    for q, t_q in enumerate(spec.impulses.times):
        node = grid.node_of(t_q)
        left = traj.left_value(node)
        p = p + res.node_matrix("dsR", last, node) @ np.asarray(spec.impulses.jump_state[q](left), dtype=float)
        p = p - res.node_matrix("R", last, node) @ np.asarray(spec.impulses.jump_velocity[q](left), dtype=float)
    return p


def control_from_defect(res: ResolventGrid, b_op: np.ndarray, V: RegularizedResolvent, defect: np.ndarray) -> ControlSignal:
    """u(τ_k) = βᵀ R(ℓ, τ_k)ᵀ V p"""
    weighted = V(defect)
    rows = res.row_transpose_apply("R", res.grid.size - 1, weighted)
    return ControlSignal(grid=res.grid, values=rows @ np.asarray(b_op, dtype=float))


def synthesize_control(
    spec: ProblemSpec,
    res: ResolventGrid,
    package: GramianPackage,
    target: np.ndarray,
    eps: float,
    tol_outer: float = 1e-9,
    max_outer: int = 100,
    picard_tol: float = 1e-10,
    picard_max_iter: int = 200,
    relaxation: float = 1.0,
) -> ControlSynthesis:
    """
    Outer fixed point: u^k from p(ϑ^k), then ϑ^{k+1} = picard_solve(u^k),
    until ‖ϑ^{k+1} - ϑ^k‖_∞ < tol_outer.

    relaxation < 1 averages successive controls after the first update:
    u^k = (1 - α) u^{k-1} + α u(p(ϑ^k)).

    Raises:
        DomainError: eps <= 0 or relaxation outside (0, 1]
        OuterLoopDivergenceError: no convergence within max_outer updates
    """
    V = regularized_resolvent(package, eps)
    if not 0.0 < relaxation <= 1.0:
        raise DomainError(f"relaxation must lie in (0, 1], got {relaxation}")
    target = np.asarray(target, dtype=float)
    if target.shape != (spec.state_dim,):
        raise DomainError(f"target must have shape ({spec.state_dim},), got {target.shape}")

    traj, report = picard_solve(spec, res, None, tol=picard_tol, max_iter=picard_max_iter)
    control: Optional[ControlSignal] = None
    distances: List[float] = []
    converged = False

    for k in range(max_outer):
        defect = compute_defect(spec, res, traj, target)
        proposal = control_from_defect(res, spec.b_op, V, defect)
        if control is None or relaxation == 1.0:
            control = proposal
        else:
            control = ControlSignal(
                grid=res.grid,
                values=(1.0 - relaxation) * control.values + relaxation * proposal.values,
            )

        updated, report = picard_solve(
            spec, res, control, tol=picard_tol, max_iter=picard_max_iter, initial=traj
        )
        distance = updated.distance(traj)
        distances.append(distance)
        traj = updated
        logger.debug(f"Outer iteration {k + 1} (ε={eps:g}): distance={distance:.3e}")
        if not np.isfinite(distance):
            break
        if distance < tol_outer:
            converged = True
            break

    if not converged:
        logger.error(f"❌ Control update loop did not converge for ε={eps:g}")
        raise OuterLoopDivergenceError(
            f"control update loop did not reach tol={tol_outer:.1e} in {len(distances)} iterations (ε={eps:g})",
            distances,
        )

    defect = compute_defect(spec, res, traj, target)
    terminal = traj.terminal()
    terminal_error = float(np.linalg.norm(terminal - target))
    identity_residual = float(np.linalg.norm(terminal - target + V.scaled(defect)))

    logger.info(
        f"✅ Synthesis ε={eps:g}: terminal error={terminal_error:.4e}, "
        f"outer iterations={len(distances)}, identity residual={identity_residual:.2e}"
    )
    return ControlSynthesis(
        epsilon=float(eps),
        control=control,
        defect=defect,
        terminal_error=terminal_error,
        outer_iterations=len(distances),
        trajectory=traj,
        target=target,
        identity_residual=identity_residual,
        outer_distances=distances,
        picard=report,
    )
