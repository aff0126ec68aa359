"""
Problem description for the impulsive neutral integrodifferential system

    d²/dt² [ϑ(t) + £₂(t, ϑ_t)] = A(t)[ϑ(t) + £₂(t, ϑ_t)]
                                 + ∫₀ᵗ ζ(t, s)[ϑ(s) + £₂(s, ϑ_s)] ds
                                 + £₁(t, ϑ(t)) + β u(t),     t ≠ t_q
    Δϑ(t_q) = I_q(ϑ(t_q)),  Δϑ'(t_q) = J_q(ϑ(t_q)),
    ϑ_0 = Φ,  ϑ'(0) = x¹

truncated to ℝᴹ. All containers are immutable after construction.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DomainError
from .segment import HistorySegment

MatrixMap = Callable[[float], np.ndarray]
KernelMap = Callable[[float, float], np.ndarray]
ForcingMap = Callable[[float, np.ndarray], np.ndarray]
NeutralMap = Callable[[float, HistorySegment], np.ndarray]
JumpMap = Callable[[np.ndarray], np.ndarray]


def _frozen(array: Any) -> np.ndarray:
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class ImpulseSchedule:
    """Impulse times t_q with state jumps I_q and velocity jumps J_q."""

    times: Tuple[float, ...] = ()
    jump_state: Tuple[JumpMap, ...] = ()
    jump_velocity: Tuple[JumpMap, ...] = ()
    kinds: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'times', tuple(float(t) for t in self.times))
        object.__setattr__(self, 'jump_state', tuple(self.jump_state))
        object.__setattr__(self, 'jump_velocity', tuple(self.jump_velocity))
        object.__setattr__(self, 'kinds', tuple(self.kinds))

    @property
    def count(self) -> int:
        return len(self.times)

    def is_empty(self) -> bool:
        return self.count == 0

    def permuted(self, order: Sequence[int]) -> "ImpulseSchedule":
        """Re-index the schedule (used to check index-permutation invariance)."""
        return ImpulseSchedule(
            times=[self.times[i] for i in order],
            jump_state=[self.jump_state[i] for i in order],
            jump_velocity=[self.jump_velocity[i] for i in order],
            kinds=[self.kinds[i] for i in order] if self.kinds else (),
        )


@dataclass(frozen=True, eq=False)
class HistoryFunction:
    """
    Initial history Φ on (-∞, 0].

    phi is only consulted on [-memory_window, 0]; earlier offsets see the
    constant Φ(-memory_window). This is the sup-norm phase space of bounded
    continuous functions, for which K₁ = K₂ = K₃ = 1.
    """

    memory_window: float
    phi: Callable[[float], np.ndarray]

    def __call__(self, theta: float) -> np.ndarray:
        if theta > 0.0:
            raise DomainError(f"history evaluated at θ={theta} > 0")
        theta = max(float(theta), -self.memory_window)
        return np.asarray(self.phi(theta), dtype=float)

    def sample_offsets(self, samples: int = 65) -> np.ndarray:
        return np.linspace(-self.memory_window, 0.0, samples)

    def sup_norm(self, samples: int = 257) -> float:
        """‖Φ‖_℘ over a uniform probe of the memory window."""
        return max(float(np.linalg.norm(self(theta))) for theta in self.sample_offsets(samples))

    def continuity_modulus(self, samples: int) -> float:
        """Largest jump between neighbouring probes of the memory window."""
        values = np.array([self(theta) for theta in self.sample_offsets(samples)])
        if len(values) < 2:
            return 0.0
        return float(np.max(np.linalg.norm(np.diff(values, axis=0), axis=-1)))


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """
    Complete discretizable description of the control system.

    Attributes:
        state_dim: M, number of state components (modal blocks)
        horizon: ℓ, final time
        a_op: t ↦ A(t), M×M
        kernel: (t, s) ↦ ζ(t, s), M×M, only evaluated for s <= t
        f1: (t, x) ↦ £₁(t, x)
        f2: (t, segment) ↦ £₂(t, ϑ_t)
        b_op: β, M×m control injection
        impulses: ImpulseSchedule
        history: HistoryFunction
        v0: x¹, initial velocity
        v0_neutral: y¹ override; None means finite-difference default
        name: scenario label
        descriptor: registry description the spec was built from (hashing, reports)
        defect_is_state_free: True when £₁ is state independent, £₂ ≡ 0 and
            every jump map is constant, so p(ϑ) does not depend on ϑ
    """

    state_dim: int
    horizon: float
    a_op: MatrixMap
    kernel: KernelMap
    f1: ForcingMap
    f2: NeutralMap
    b_op: np.ndarray
    impulses: ImpulseSchedule
    history: HistoryFunction
    v0: np.ndarray
    v0_neutral: Optional[np.ndarray] = None
    name: str = "scenario"
    descriptor: Dict[str, Any] = field(default_factory=dict)
    defect_is_state_free: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'b_op', _frozen(np.atleast_2d(self.b_op)))
        object.__setattr__(self, 'v0', _frozen(np.atleast_1d(self.v0)))
        if self.v0_neutral is not None:
            object.__setattr__(self, 'v0_neutral', _frozen(np.atleast_1d(self.v0_neutral)))

    @property
    def control_dim(self) -> int:
        return int(self.b_op.shape[1])

    def initial_state(self) -> np.ndarray:
        """Φ(0)"""
        return self.history(0.0)

    def initial_segment(self) -> HistorySegment:
        """ϑ_0 = Φ as a history segment."""
        return HistorySegment(
            anchor=0.0,
            lookup=self.history,
            sample_offsets=self.history.sample_offsets(),
        )

    def shifted_history_segment(self, t: float) -> HistorySegment:
        """
        Segment of the history advanced to a small time t (|t| <= grid step).

        For t + θ > 0 the history is continued linearly with the initial
        velocity: Φ(0) + (t + θ) x¹.
        """
        phi0 = self.initial_state()
        v0 = self.v0

        def lookup(theta: float) -> np.ndarray:
            s = t + theta
            if s <= 0.0:
                return self.history(s)
            return phi0 + s * v0

        return HistorySegment(anchor=t, lookup=lookup, sample_offsets=self.history.sample_offsets())

    def neutral_velocity(self, step: float) -> np.ndarray:
        """
        y¹ = d/dt £₂(t, ϑ_t) at t = 0.

        Uses the override when given, else a central difference of
        t ↦ £₂(t, shifted history) with the supplied step.
        """
        if self.v0_neutral is not None:
            return np.array(self.v0_neutral, dtype=float)
        if step <= 0.0:
            raise DomainError(f"finite-difference step must be positive, got {step}")
        ahead = np.asarray(self.f2(step, self.shifted_history_segment(step)), dtype=float)
        behind = np.asarray(self.f2(-step, self.shifted_history_segment(-step)), dtype=float)
        return (ahead - behind) / (2.0 * step)

    def with_kernel(self, kernel: KernelMap, label: str = "custom") -> "ProblemSpec":
        """Copy of the spec with a different memory kernel."""
        descriptor = dict(self.descriptor)
        descriptor['kernel'] = {'kind': label}
        return ProblemSpec(
            state_dim=self.state_dim,
            horizon=self.horizon,
            a_op=self.a_op,
            kernel=kernel,
            f1=self.f1,
            f2=self.f2,
            b_op=self.b_op,
            impulses=self.impulses,
            history=self.history,
            v0=self.v0,
            v0_neutral=self.v0_neutral,
            name=self.name,
            descriptor=descriptor,
            defect_is_state_free=self.defect_is_state_free,
        )

    def with_impulses(self, impulses: ImpulseSchedule) -> "ProblemSpec":
        """Copy of the spec with a different impulse schedule."""
        return ProblemSpec(
            state_dim=self.state_dim,
            horizon=self.horizon,
            a_op=self.a_op,
            kernel=self.kernel,
            f1=self.f1,
            f2=self.f2,
            b_op=self.b_op,
            impulses=impulses,
            history=self.history,
            v0=self.v0,
            v0_neutral=self.v0_neutral,
            name=self.name,
            descriptor=dict(self.descriptor),
            defect_is_state_free=self.defect_is_state_free,
        )


def control_rank(spec: ProblemSpec, tol: Optional[float] = None) -> int:
    """Rank of β (reported by the validator for controllability diagnosis)."""
    if spec.b_op.size == 0:
        return 0
    return int(np.linalg.matrix_rank(spec.b_op, tol=tol))


def zero_kernel(dim: int) -> KernelMap:
    """ζ ≡ 0, flagged so resolvent sampling can skip the memory term."""
    zeros = _frozen(np.zeros((dim, dim)))

    def kernel(t: float, s: float) -> np.ndarray:
        return zeros
    kernel.vanishes = True  # type: ignore[attr-defined]
    return kernel


def impulse_times_list(spec: ProblemSpec) -> List[float]:
    return list(spec.impulses.times)
