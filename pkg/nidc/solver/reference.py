"""
Brute-force reference integrator used to cross-check the mild solver.

Integrates the differential form directly, with no resolvent:

    E(t) = ϑ(t) + £₂(t, ϑ_t)
    E'' = A(t) E + ∫₀ᵗ ζ(t, s) E(s) ds + £₁(t, ϑ(t)) + βu(t)
    E(0) = Φ(0) + £₂(0, Φ),  E'(0) = x¹ + y¹

by classical RK4 on (E, E') with a fine step. Past states are stored and
linearly interpolated, so £₂ must only read the segment at offsets θ
no larger than minus the step (delay-type neutral terms). At an impulse
node E jumps by I_q(ϑ(t_q⁻)) and E' by J_q(ϑ(t_q⁻)).
"""

import logging
from typing import Callable, List, Optional

import numpy as np

from ..errors import DomainError, NonFiniteSampleError
from ..model.segment import HistorySegment
from ..model.spec import ProblemSpec
from ..resolvent.grid import TimeGrid
from .trajectory import ControlSignal, Trajectory

logger = logging.getLogger(__name__)


class _PastStates:
    """Growing record of (t, ϑ(t)) used for delayed lookups."""

    def __init__(self, spec: ProblemSpec, capacity: int):
        self.spec = spec
        self.times = np.zeros(capacity)
        self.states = np.zeros((capacity, spec.state_dim))
        self.count = 0

    def append(self, t: float, state: np.ndarray) -> None:
        self.times[self.count] = t
        self.states[self.count] = state
        self.count += 1

    def lookup(self, s: float) -> np.ndarray:
        if s < 0.0:
            return self.spec.history(s)
        times = self.times[:self.count]
        if s >= times[-1]:
            return self.states[self.count - 1]
        i = int(np.searchsorted(times, s, side='right')) - 1
        w = (s - times[i]) / (times[i + 1] - times[i])
        return (1.0 - w) * self.states[i] + w * self.states[i + 1]

    def segment(self, t: float) -> HistorySegment:
        return HistorySegment(anchor=t, lookup=lambda theta: self.lookup(t + theta))


def integrate_reference(
    spec: ProblemSpec,
    step: float = 2e-4,
    control: Optional[Callable[[float], np.ndarray]] = None,
) -> Trajectory:
    """
    Solve the system on a fine impulse-aligned grid.

    Args:
        spec: Problem description (£₂ of delay type)
        step: RK4 step
        control: u(t) as a callable or ControlSignal (default zero)

    Returns:
        Trajectory on the fine grid
    """
    if step <= 0.0:
        raise DomainError(f"reference step must be positive, got {step}")

    grid = TimeGrid.uniform(spec.horizon, step, spec.impulses.times)
    nodes = grid.nodes
    dim = spec.state_dim

    if control is None:
        zeros = np.zeros(spec.control_dim)
        u_of: Callable[[float], np.ndarray] = lambda t: zeros
    elif isinstance(control, ControlSignal):
        u_of = control.value_at
    else:
        u_of = control

    memory = not getattr(spec.kernel, "vanishes", False)
    past = _PastStates(spec, grid.size)
    E_hist = np.zeros((grid.size, dim))

    def state_from(t: float, E: np.ndarray) -> np.ndarray:
        return E - np.asarray(spec.f2(t, past.segment(t)), dtype=float)

    def memory_term(t: float, n: int, E_stage: np.ndarray) -> np.ndarray:
        if not memory:
            return 0.0
        total = np.zeros(dim)
        if n > 0:
            w = grid.trapezoid_weights(n)
            Z = np.array([spec.kernel(t, s) for s in nodes[:n + 1]])
            total += np.einsum('k,kab,kb->a', w, Z, E_hist[:n + 1])
        tail = t - nodes[n]
        if tail > 0.0:
            total += tail / 2.0 * (spec.kernel(t, nodes[n]) @ E_hist[n] + spec.kernel(t, t) @ E_stage)
        return total

    def rhs(t: float, n: int, E: np.ndarray, V: np.ndarray):
        x = state_from(t, E)
        accel = (
            spec.a_op(t) @ E
            + memory_term(t, n, E)
            + np.asarray(spec.f1(t, x), dtype=float)
            + spec.b_op @ np.asarray(u_of(t), dtype=float)
        )
        return V, accel

    phi0 = spec.initial_state()
    E = phi0 + np.asarray(spec.f2(0.0, spec.initial_segment()), dtype=float)
    V = spec.v0 + spec.neutral_velocity(step)

    values = np.zeros((grid.size, dim))
    values[0] = phi0
    past.append(0.0, phi0)
    E_hist[0] = E
    left_limits = {}
    impulse_at = {grid.node_of(t): q for q, t in enumerate(spec.impulses.times)}

    for n in range(grid.size - 1):
        t, h = nodes[n], nodes[n + 1] - nodes[n]
        k1E, k1V = rhs(t, n, E, V)
        k2E, k2V = rhs(t + h / 2, n, E + h / 2 * k1E, V + h / 2 * k1V)
        k3E, k3V = rhs(t + h / 2, n, E + h / 2 * k2E, V + h / 2 * k2V)
        k4E, k4V = rhs(t + h, n, E + h * k3E, V + h * k3V)
        E = E + h / 6 * (k1E + 2 * k2E + 2 * k3E + k4E)
        V = V + h / 6 * (k1V + 2 * k2V + 2 * k3V + k4V)

        x = state_from(nodes[n + 1], E)
        if not np.all(np.isfinite(x)):
            raise NonFiniteSampleError("reference state", f"t={nodes[n + 1]:.6g}")

        if n + 1 in impulse_at:
            q = impulse_at[n + 1]
            left_limits[n + 1] = x.copy()
            dx = np.asarray(spec.impulses.jump_state[q](x), dtype=float)
            dv = np.asarray(spec.impulses.jump_velocity[q](x), dtype=float)
            E = E + dx
            V = V + dv
            x = x + dx

        values[n + 1] = x
        past.append(nodes[n + 1], x)
        E_hist[n + 1] = E

    logger.debug(f"Reference integration finished: {grid.size} nodes, step={step:.1e}")
    return Trajectory(grid=grid, values=values, left_limits=left_limits, velocity0=spec.v0)
