"""Time grids on T = [0, ℓ] with impulse times as nodes."""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Sequence, Tuple

import numpy as np

from ..errors import DomainError


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """
    Strictly increasing nodes 0 = τ₀ < … < τ_K = ℓ.

    impulse_index maps each impulse time that lies strictly inside (0, ℓ) to
    its node index.
    """

    nodes: np.ndarray
    impulse_aligned: bool
    step_max: float
    impulse_index: Dict[float, int] = field(default_factory=dict)

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise DomainError("a time grid needs at least two nodes")
        if np.any(np.diff(nodes) <= 0.0):
            raise DomainError("grid nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, 'nodes', nodes)

    @classmethod
    def uniform(cls, horizon: float, step: float, impulse_times: Iterable[float] = ()) -> "TimeGrid":
        """
        Piecewise-uniform grid with spacing <= step.

        Each interval between consecutive breakpoints (0, the impulse times
        inside (0, ℓ), and ℓ) is split evenly, so 0, ℓ and every impulse time
        are nodes exactly.
        """
        if horizon <= 0.0:
            raise DomainError(f"horizon must be positive, got {horizon}")
        if step <= 0.0:
            raise DomainError(f"grid step must be positive, got {step}")

        inside = sorted({float(t) for t in impulse_times if 0.0 < float(t) < horizon})
        breakpoints = [0.0] + inside + [float(horizon)]

        pieces = []
        for a, b in zip(breakpoints[:-1], breakpoints[1:]):
            n = max(1, math.ceil((b - a) / step - 1e-9))
            pieces.append(np.linspace(a, b, n + 1)[:-1])
        pieces.append(np.array([float(horizon)]))
        nodes = np.concatenate(pieces)

        index = {t: int(np.searchsorted(nodes, t)) for t in inside}
        aligned = all(nodes[i] == t for t, i in index.items())
        return cls(nodes=nodes, impulse_aligned=aligned, step_max=float(np.max(np.diff(nodes))), impulse_index=index)

    @property
    def size(self) -> int:
        """Number of nodes K + 1."""
        return int(self.nodes.size)

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    @property
    def steps(self) -> np.ndarray:
        """h_i = τ_{i+1} - τ_i"""
        return np.diff(self.nodes)

    def trapezoid_weights(self, upto: int = -1) -> np.ndarray:
        """Trapezoid weights for ∫₀^{τ_upto} on the nodes τ₀..τ_upto."""
        last = self.size - 1 if upto < 0 else upto
        weights = np.zeros(last + 1)
        if last == 0:
            return weights
        h = self.steps[:last]
        weights[:-1] += h / 2.0
        weights[1:] += h / 2.0
        return weights

    def node_of(self, t: float) -> int:
        """Index of the node equal to t (exact match required)."""
        i = int(np.searchsorted(self.nodes, t))
        if i < self.size and self.nodes[i] == t:
            return i
        raise DomainError(f"t={t} is not a grid node")

    def bracket(self, t: float) -> Tuple[int, float]:
        """
        (i, w) with τ_i <= t <= τ_{i+1} and t = (1 - w)τ_i + wτ_{i+1}.

        At the last node returns (K - 1, 1.0).
        """
        if t < 0.0 or t > self.horizon:
            raise DomainError(f"t={t} outside [0, {self.horizon}]")
        i = int(np.searchsorted(self.nodes, t, side='right')) - 1
        i = min(max(i, 0), self.size - 2)
        h = self.nodes[i + 1] - self.nodes[i]
        return i, float((t - self.nodes[i]) / h)

    def impulse_nodes(self, times: Sequence[float]) -> Tuple[int, ...]:
        return tuple(self.impulse_index[float(t)] for t in times if float(t) in self.impulse_index)
