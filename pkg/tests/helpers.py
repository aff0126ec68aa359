"""Builders for small closed-form problems used across the tests."""

from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from nidc.model.spec import HistoryFunction, ImpulseSchedule, ProblemSpec, zero_kernel
from nidc.resolvent.family import ResolventGrid

SCENARIO_DIR = Path(__file__).parent.parent / "config" / "scenarios"


def diagonal_spec(
    wavenumbers: Sequence[float],
    horizon: float = 1.0,
    phi0: Optional[Sequence[float]] = None,
    v0: Optional[Sequence[float]] = None,
    b_op: Optional[np.ndarray] = None,
    f1: Optional[Callable] = None,
    f2: Optional[Callable] = None,
    kernel: Optional[Callable] = None,
    impulses: Optional[ImpulseSchedule] = None,
    history: Optional[HistoryFunction] = None,
    v0_neutral: Optional[Sequence[float]] = None,
    state_free: Optional[bool] = None,
) -> ProblemSpec:
    """ϑ'' = -diag(m²) ϑ plus whatever is passed in."""
    m = np.asarray(wavenumbers, dtype=float)
    dim = m.size
    A = np.diag(-m ** 2)
    zeros = np.zeros(dim)
    phi_value = np.zeros(dim) if phi0 is None else np.asarray(phi0, dtype=float)

    if state_free is None:
        state_free = f1 is None and f2 is None and (impulses is None or impulses.is_empty())
    return ProblemSpec(
        state_dim=dim,
        horizon=horizon,
        a_op=lambda t: A,
        kernel=kernel or zero_kernel(dim),
        f1=f1 or (lambda t, x: zeros),
        f2=f2 or (lambda t, seg: zeros),
        b_op=np.eye(dim) if b_op is None else b_op,
        impulses=impulses or ImpulseSchedule(),
        history=history or HistoryFunction(memory_window=1.0, phi=lambda theta: phi_value),
        v0=np.zeros(dim) if v0 is None else np.asarray(v0, dtype=float),
        v0_neutral=None if v0_neutral is None else np.asarray(v0_neutral, dtype=float),
        name="test",
        defect_is_state_free=state_free,
    )


def scalar_stack(res: ResolventGrid, which: str) -> np.ndarray:
    """(K+1, K+1) array of the stored scalar resolvent values."""
    arr = res.R if which == "R" else res.dsR
    return arr[..., 0] if res.diagonal else arr[..., 0, 0]


def lower_mask(size: int) -> np.ndarray:
    return np.tril(np.ones((size, size), dtype=bool))


