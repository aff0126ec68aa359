"""
Resolvent family R(t, s) of the memory problem on a time grid.

- grid.py: impulse-aligned time grids
- family.py: two-step construction and interpolation (eval_R, eval_dsR)
- bounds.py: sampled M₁, M₂ and Lipschitz constants
- cache.py: binary on-disk cache keyed by operator samples
"""

from .family import ResolventGrid, build_resolvent_grid, eval_dsR, eval_R
from .grid import TimeGrid

__all__ = ["ResolventGrid", "TimeGrid", "build_resolvent_grid", "eval_R", "eval_dsR"]
