"""ε-sweeps of the control synthesis."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

from ..errors import DomainError, SweepMonotonicityError
from ..model.spec import ProblemSpec
from ..resolvent.family import ResolventGrid
from .gramian import GramianPackage
from .synthesis import ControlSynthesis, synthesize_control

logger = logging.getLogger(__name__)

# relative slack for "non-increasing" comparisons of terminal errors
MONOTONE_RTOL = 1e-9


@dataclass
class SweepResult:
    """One row per ε: (epsilon, terminal_error, control_energy, outer_iterations)."""

    syntheses: List[ControlSynthesis] = field(default_factory=list)
    monotone: bool = True
    energy_monotone: bool = True

    @property
    def rows(self) -> List[Dict[str, Any]]:
        return [
            {
                'epsilon': s.epsilon,
                'terminal_error': s.terminal_error,
                'control_energy': s.control_energy,
                'outer_iterations': s.outer_iterations,
            }
            for s in self.syntheses
        ]

    def reduction_factor(self) -> float:
        """terminal error of the first row over that of the last row"""
        first, last = self.syntheses[0].terminal_error, self.syntheses[-1].terminal_error
        return float('inf') if last == 0.0 else first / last


def _non_increasing(values: Sequence[float]) -> bool:
    return all(b <= a * (1.0 + MONOTONE_RTOL) + 1e-15 for a, b in zip(values, values[1:]))


def epsilon_sweep(
    spec: ProblemSpec,
    res: ResolventGrid,
    package: GramianPackage,
    target,
    eps_list: Sequence[float],
    assert_monotone: Optional[bool] = None,
    **synthesis_options,
) -> SweepResult:
    """
    Run synthesize_control for each ε of a strictly decreasing list.

    Monotone terminal errors are enforced when the terminal defect does not
    depend on the state (spec.defect_is_state_free, the linear case) and
    only logged otherwise. assert_monotone overrides that choice.

    Raises:
        DomainError: empty, non-positive or non-decreasing eps_list
        SweepMonotonicityError: enforced monotonicity violated
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise DomainError("epsilon list must not be empty")
    if any(e <= 0.0 for e in eps_list):
        raise DomainError("epsilons must be positive")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise DomainError("epsilon list must be strictly decreasing")

    enforce = spec.defect_is_state_free if assert_monotone is None else assert_monotone
    logger.info(f"🚀 ε-sweep over {len(eps_list)} values ({'linear' if enforce else 'nonlinear'} checks)")

    result = SweepResult()
    for eps in eps_list:
        result.syntheses.append(synthesize_control(spec, res, package, target, eps, **synthesis_options))

    errors = [s.terminal_error for s in result.syntheses]
    energies = [s.control_energy for s in result.syntheses]
    result.monotone = _non_increasing(errors)
    result.energy_monotone = _non_increasing(energies[::-1])

    if not result.monotone:
        message = f"terminal errors not non-increasing along the sweep: {errors}"
        if enforce:
            raise SweepMonotonicityError(message, errors)
        logger.warning(f"⚠️  {message}")
    if not result.energy_monotone:
        logger.warning(f"⚠️  control energy not non-decreasing as ε decreases: {energies}")

    logger.info(f"✅ Sweep finished: terminal error reduced ×{result.reduction_factor():.3g}")
    return result
