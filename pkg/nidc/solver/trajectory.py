"""
Piecewise-continuous state paths on an impulse-aligned grid.

Impulse nodes carry two values: the right limit in `values` and the left
limit in `left_limits`. Point evaluation follows the left-continuous
convention ϑ(t_q) = ϑ(t_q⁻).
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from ..errors import DomainError, NonFiniteSampleError
from ..model.segment import HistorySegment
from ..model.spec import HistoryFunction, ProblemSpec
from ..resolvent.grid import TimeGrid

__all__ = [
    "Trajectory",
    "ControlSignal",
    "HistorySegment",
    "segment_history",
    "apply_jump",
]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """ϑ(τ_i) per node with left limits ϑ(t_q⁻) kept at impulse nodes."""

    grid: TimeGrid
    values: np.ndarray
    left_limits: Dict[int, np.ndarray] = field(default_factory=dict)
    velocity0: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != self.grid.size:
            raise DomainError(f"trajectory values must have shape (K+1, M), got {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'left_limits', {int(k): np.array(v, dtype=float) for k, v in self.left_limits.items()})

    @classmethod
    def constant(cls, grid: TimeGrid, value: np.ndarray, velocity0: Optional[np.ndarray] = None) -> "Trajectory":
        value = np.asarray(value, dtype=float)
        return cls(grid=grid, values=np.tile(value, (grid.size, 1)), velocity0=velocity0)

    @property
    def state_dim(self) -> int:
        return int(self.values.shape[1])

    def left_value(self, i: int) -> np.ndarray:
        """ϑ(τ_i⁻); equals values[i] away from impulse nodes."""
        if i in self.left_limits:
            return self.left_limits[i]
        return self.values[i]

    def left_values(self) -> np.ndarray:
        """values with impulse nodes replaced by their left limits."""
        out = np.array(self.values)
        for i, v in self.left_limits.items():
            out[i] = v
        return out

    def value_at(self, t: float) -> np.ndarray:
        """ϑ(t) by linear interpolation between the right limit at τ_i and the left limit at τ_{i+1}."""
        i, w = self.grid.bracket(t)
        if w == 0.0:
            return self.left_value(i)
        if w == 1.0:
            return self.left_value(i + 1)
        return (1.0 - w) * self.values[i] + w * self.left_value(i + 1)

    def terminal(self) -> np.ndarray:
        return self.left_value(self.grid.size - 1)

    def sup_norm(self) -> float:
        """max over nodes (both one-sided values) of ‖ϑ‖"""
        peak = float(np.max(np.linalg.norm(self.values, axis=1)))
        for v in self.left_limits.values():
            peak = max(peak, float(np.linalg.norm(v)))
        return peak

    def distance(self, other: "Trajectory") -> float:
        """Sup-norm distance over node values and left limits."""
        gap = float(np.max(np.abs(self.values - other.values))) if self.values.size else 0.0
        for i in set(self.left_limits) | set(other.left_limits):
            gap = max(gap, float(np.max(np.abs(self.left_value(i) - other.left_value(i)))))
        return gap

    def jumps(self) -> Dict[int, np.ndarray]:
        """values - left_limits at impulse nodes"""
        return {i: self.values[i] - left for i, left in self.left_limits.items()}


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Grid-sampled control u(τ_i) ∈ ℝᵐ."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != self.grid.size:
            raise DomainError(f"control values must have shape (K+1, m), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteSampleError("control", "grid")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @classmethod
    def zeros(cls, grid: TimeGrid, control_dim: int) -> "ControlSignal":
        return cls(grid=grid, values=np.zeros((grid.size, control_dim)))

    @classmethod
    def from_function(cls, grid: TimeGrid, func: Callable[[float], np.ndarray], control_dim: int) -> "ControlSignal":
        values = np.array([np.broadcast_to(np.asarray(func(t), dtype=float), (control_dim,)) for t in grid.nodes])
        return cls(grid=grid, values=values)

    @property
    def control_dim(self) -> int:
        return int(self.values.shape[1])

    def value_at(self, t: float) -> np.ndarray:
        i, w = self.grid.bracket(t)
        return (1.0 - w) * self.values[i] + w * self.values[i + 1]

    def energy(self) -> float:
        """‖u‖_{L²(0, ℓ)} by the trapezoid rule."""
        squared = np.sum(self.values ** 2, axis=1)
        return float(np.sqrt(np.dot(self.grid.trapezoid_weights(), squared)))

    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=1)))


def segment_history(traj: Trajectory, hist: HistoryFunction, t: float) -> HistorySegment:
    """
    ϑ_t(θ) = ϑ(t + θ): trajectory for t + θ >= 0, history for t + θ < 0.

    Sup-norm offsets cover every grid node up to t and the history samples
    on [-τ_mem - t, -t].
    """
    horizon = traj.grid.horizon
    if t < 0.0 or t > horizon:
        raise DomainError(f"segment anchor t={t} outside [0, {horizon}]")

    def lookup(theta: float) -> np.ndarray:
        s = t + theta
        if s < 0.0:
            return hist(s)
        return traj.value_at(min(s, horizon))

    past_nodes = traj.grid.nodes[traj.grid.nodes <= t] - t
    history_offsets = hist.sample_offsets() - t
    offsets = np.unique(np.concatenate([history_offsets, past_nodes, [0.0]]))
    return HistorySegment(anchor=float(t), lookup=lookup, sample_offsets=offsets)


def apply_jump(traj: Trajectory, q: int, spec: ProblemSpec) -> Trajectory:
    """
    Re-impose Δϑ(t_q) = I_q(ϑ(t_q⁻)) at the q-th impulse (1-based).

    The right limit becomes left + I_q(left); the left limit is kept (or
    taken from values when none was recorded).
    """
    count = spec.impulses.count
    if q < 1 or q > count:
        raise DomainError(f"impulse index q={q} outside 1..{count}")
    node = traj.grid.node_of(spec.impulses.times[q - 1])
    left = np.array(traj.left_value(node))
    jump = np.asarray(spec.impulses.jump_state[q - 1](left), dtype=float)
    if not np.all(np.isfinite(jump)):
        raise NonFiniteSampleError(f"I_{q}", f"t={spec.impulses.times[q - 1]:.6g}")

    values = np.array(traj.values)
    values[node] = left + jump
    left_limits = dict(traj.left_limits)
    left_limits[node] = left
    return Trajectory(grid=traj.grid, values=values, left_limits=left_limits, velocity0=traj.velocity0)
