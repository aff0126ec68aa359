"""Sampled bounds and Lipschitz constants of a built resolvent family."""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from .family import ResolventGrid


@dataclass(frozen=True)
class ResolventBounds:
    """
    M1 = max ‖R(τ_i, τ_j)‖, M2 = max ‖∂R/∂s(τ_i, τ_j)‖ over i >= j,
    LR, MR = max difference quotients in t of R and ∂R/∂s.
    """

    M1: float
    M2: float
    LR: float
    MR: float
    node_pairs: int

    def as_dict(self) -> Dict[str, float]:
        return {'M1': self.M1, 'M2': self.M2, 'LR': self.LR, 'MR': self.MR, 'node_pairs': self.node_pairs}


def _norms(res: ResolventGrid, stack: np.ndarray) -> np.ndarray:
    """Spectral norms of the trailing matrix axes (absolute values in the per-mode layout)."""
    if res.diagonal:
        return np.max(np.abs(stack), axis=-1)
    if res.state_dim == 1:
        return np.abs(stack[..., 0, 0])
    return np.linalg.norm(stack, ord=2, axis=(-2, -1))


def verify_resolvent_bounds(res: ResolventGrid) -> ResolventBounds:
    """Sampled constants over all lower-triangle node pairs."""
    size = res.grid.size
    lower = np.tril(np.ones((size, size), dtype=bool))
    h = res.grid.steps

    M1 = float(np.max(_norms(res, res.R)[lower]))
    M2 = float(np.max(_norms(res, res.dsR)[lower]))

    # rows i+1 and i at columns j <= i
    step_mask = np.tril(np.ones((size - 1, size), dtype=bool))
    quotient_R = _norms(res, res.R[1:] - res.R[:-1]) / h[:, None]
    quotient_D = _norms(res, res.dsR[1:] - res.dsR[:-1]) / h[:, None]
    LR = float(np.max(quotient_R[step_mask]))
    MR = float(np.max(quotient_D[step_mask]))

    return ResolventBounds(M1=M1, M2=M2, LR=LR, MR=MR, node_pairs=int(lower.sum()))
