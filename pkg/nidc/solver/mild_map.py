"""
Mild-solution map Q̃ evaluated on the grid.

    (Q̃ϑ)(t) = -∂R/∂s(t, 0)[Φ(0) + £₂(0, Φ)] + R(t, 0)[x¹ + y¹] - £₂(t, ϑ_t)
              + ∫₀ᵗ R(t, s)[£₁(s, ϑ(s)) + βu(s)] ds
              - Σ_{t_q < t} ∂R/∂s(t, t_q) I_q(ϑ(t_q⁻)) + Σ_{t_q < t} R(t, t_q) J_q(ϑ(t_q⁻))

The convolution uses the trapezoid rule on the grid nodes with stored R
values. On each side of an impulse node the integrand uses the matching
one-sided state, so the rule is exact for piecewise-linear data. At an
impulse node the formula gives the left limit; the right limit is then set
by the jump map applied to that left limit.
"""

import logging
from typing import Dict, Optional

import numpy as np

from ..errors import NonFiniteSampleError
from ..model.spec import ProblemSpec
from ..resolvent.family import ResolventGrid
from .trajectory import ControlSignal, Trajectory, apply_jump, segment_history

logger = logging.getLogger(__name__)


def _finite(value, name: str, where: str, term: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteSampleError(name, where, f"term {term}")
    return arr


def convolution_weights(res: ResolventGrid) -> Dict[str, np.ndarray]:
    """
    Split trapezoid weights for ∫₀^{τ_i}.

    after[i, k] = h_k/2 for k < i multiplies the right-side value at τ_k;
    before[i, k] = h_{k-1}/2 for 1 <= k <= i multiplies the left-side value.
    """
    size = res.grid.size
    h = res.grid.steps
    rows = np.arange(size)[:, None]
    cols = np.arange(size)[None, :]

    after = np.zeros((size, size))
    after[:, :-1] = np.where(cols[:, :-1] < rows, h[None, :] / 2.0, 0.0)
    before = np.zeros((size, size))
    before[:, 1:] = np.where((cols[:, 1:] <= rows), h[None, :] / 2.0, 0.0)
    return {'after': after, 'before': before}


def neutral_velocity(spec: ProblemSpec, res: ResolventGrid) -> np.ndarray:
    """y¹ with the first grid step as finite-difference step."""
    return spec.neutral_velocity(float(res.grid.steps[0]))


def forcing_samples(spec: ProblemSpec, traj: Trajectory, control: ControlSignal) -> Dict[str, np.ndarray]:
    """£₁(τ_k, ϑ) + βu(τ_k) with right-side and left-side states."""
    nodes = traj.grid.nodes
    Bu = control.values @ spec.b_op.T
    right = np.array([
        _finite(spec.f1(t, traj.values[k]), "f1", f"t={t:.6g}", "∫R(£₁+βu)") for k, t in enumerate(nodes)
    ]) + Bu
    left = np.array(right)
    for k, v in traj.left_limits.items():
        left[k] = _finite(spec.f1(nodes[k], v), "f1", f"t={nodes[k]:.6g}⁻", "∫R(£₁+βu)") + Bu[k]
    return {'after': right, 'before': left}


def neutral_samples(spec: ProblemSpec, traj: Trajectory) -> np.ndarray:
    """£₂(τ_i, ϑ_{τ_i}) for every node, segments built from the input trajectory."""
    return np.array([
        _finite(spec.f2(t, segment_history(traj, spec.history, t)), "f2", f"t={t:.6g}", "£₂(t, ϑ_t)")
        for t in traj.grid.nodes
    ])


def evaluate_mild_map(
    spec: ProblemSpec,
    res: ResolventGrid,
    traj: Trajectory,
    control: ControlSignal,
    weights: Optional[Dict[str, np.ndarray]] = None,
    y1: Optional[np.ndarray] = None,
) -> Trajectory:
    """
    (Q̃ traj) at every node.

    Args:
        spec: Problem description
        res: Resolvent family on the impulse-aligned grid of traj
        traj: Input trajectory
        control: Grid-sampled control
        weights: Pre-computed convolution_weights(res) (reused across Picard iterations)
        y1: Pre-computed neutral velocity

    Returns:
        New Trajectory with left limits recorded at impulse nodes
    """
    grid = res.grid
    nodes = grid.nodes
    weights = weights if weights is not None else convolution_weights(res)
    y1 = y1 if y1 is not None else neutral_velocity(spec, res)

    phi0 = spec.initial_state()
    e0 = phi0 + _finite(spec.f2(0.0, spec.initial_segment()), "f2", "t=0", "£₂(0, Φ)")

    out = -res.column_apply("dsR", 0, e0)
    out += res.column_apply("R", 0, spec.v0 + y1)
    out -= neutral_samples(spec, traj)

    g = forcing_samples(spec, traj, control)
    out += res.convolve("R", weights['after'], g['after'])
    out += res.convolve("R", weights['before'], g['before'])

    impulse_nodes = []
    for q, t_q in enumerate(spec.impulses.times):
        node = grid.node_of(t_q)
        impulse_nodes.append(node)
        left = traj.left_value(node)
        where = f"t={t_q:.6g}"
        jump_state = _finite(spec.impulses.jump_state[q](left), f"I_{q + 1}", where, "∂R/∂s·I_q")
        jump_velocity = _finite(spec.impulses.jump_velocity[q](left), f"J_{q + 1}", where, "R·J_q")
        later = nodes > t_q
        out[later] -= res.column_apply("dsR", node, jump_state)[later]
        out[later] += res.column_apply("R", node, jump_velocity)[later]

    out[0] = phi0

    # `out` holds left limits at impulse nodes; rebuild right limits from them
    left_limits = {node: np.array(out[node]) for node in impulse_nodes}
    result = Trajectory(grid=grid, values=out, left_limits=left_limits, velocity0=spec.v0)
    for q in range(1, spec.impulses.count + 1):
        result = apply_jump(result, q, spec)
    return result
