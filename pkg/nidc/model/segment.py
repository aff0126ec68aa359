"""
History segments ϑ_t(θ) = ϑ(t + θ), θ <= 0.

A segment is what the neutral term £₂ sees. The mild solver builds them
by splicing trajectory values with the initial history (see
nidc.solver.trajectory.segment_history); hypothesis probing builds
constant segments directly.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import DomainError


@dataclass(frozen=True, eq=False)
class HistorySegment:
    """
    Lookup θ ↦ ϑ_t(θ) for θ <= 0, anchored at time t.

    sample_offsets are the θ values (all <= 0) at which the sup-norm is
    evaluated; they cover [-τ_mem - anchor, 0] for spliced segments.
    """

    anchor: float
    lookup: Callable[[float], np.ndarray]
    sample_offsets: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __call__(self, theta: float) -> np.ndarray:
        if theta > 0.0:
            raise DomainError(f"history segment evaluated at positive offset θ={theta}")
        return np.asarray(self.lookup(float(theta)), dtype=float)

    def sup_norm(self) -> float:
        """‖ϑ_t‖_℘ = sup_θ ‖ϑ_t(θ)‖ over the sample offsets."""
        return max(float(np.linalg.norm(self(float(theta)))) for theta in self.sample_offsets)

    @classmethod
    def constant(cls, value: np.ndarray, window: float = 1.0, anchor: float = 0.0) -> "HistorySegment":
        """Segment identically equal to value (sup-norm ‖value‖)."""
        frozen = np.array(value, dtype=float)
        frozen.setflags(write=False)
        return cls(
            anchor=anchor,
            lookup=lambda theta: frozen,
            sample_offsets=np.linspace(-max(window, 0.0), 0.0, 5),
        )

    @classmethod
    def from_function(
        cls,
        func: Callable[[float], np.ndarray],
        window: float,
        anchor: float = 0.0,
        samples: Optional[int] = None,
    ) -> "HistorySegment":
        """Segment given by an explicit θ ↦ value map on [-window, 0]."""
        n = samples or 33
        return cls(anchor=anchor, lookup=func, sample_offsets=np.linspace(-max(window, 0.0), 0.0, n))
