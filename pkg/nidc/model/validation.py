"""
Structural validation of a ProblemSpec.

Every check is independent and returns Violation records; the combined
list is sorted, so the result does not depend on check order. A map that
raises while being probed becomes a violation too.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .segment import HistorySegment
from .spec import ProblemSpec, control_rank

logger = logging.getLogger(__name__)

PROBE_TIMES = 9
CONTINUITY_COARSE = 65
CONTINUITY_FINE = 1025
CONTINUITY_FLOOR = 1e-8


@dataclass(frozen=True, order=True)
class Violation:
    """A structural problem; `message` is the stable human-readable key."""

    code: str
    message: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.message} ({self.detail})" if self.detail else self.message


def _probe(
    func: Callable[[], Any],
    name: str,
    where: str,
    shape: Tuple[int, ...],
) -> List[Violation]:
    try:
        value = np.asarray(func(), dtype=float)
    except Exception as e:  # any failure of user-selected maps is reported, not raised
        return [Violation("map_error", f"{name} raised", f"{where}: {type(e).__name__}: {e}")]
    if value.shape != shape:
        return [Violation("shape", f"{name} has wrong shape", f"{where}: got {value.shape}, expected {shape}")]
    if not np.all(np.isfinite(value)):
        return [Violation("non_finite", f"non-finite sample of {name}", where)]
    return []


def _check_scalars(spec: ProblemSpec) -> List[Violation]:
    out = []
    if not spec.horizon > 0.0 or not np.isfinite(spec.horizon):
        out.append(Violation("horizon", "horizon must be positive", f"ℓ={spec.horizon}"))
    if spec.state_dim < 1:
        out.append(Violation("state_dim", "state dimension must be at least 1", f"M={spec.state_dim}"))
    return out


def _check_impulses(spec: ProblemSpec) -> List[Violation]:
    out = []
    sched = spec.impulses
    lengths = (len(sched.times), len(sched.jump_state), len(sched.jump_velocity))
    if len(set(lengths)) != 1:
        out.append(Violation("impulse_length", "impulse schedule length mismatch", f"times/I/J = {lengths}"))

    times = list(sched.times)
    if any(b <= a for a, b in zip(times, times[1:])):
        out.append(Violation("impulse_order", "impulse times not increasing", f"{times}"))

    for q, t in enumerate(times, start=1):
        if t == spec.horizon:
            out.append(Violation("impulse_horizon", "impulse at horizon", f"t_{q}={t}"))
        elif not 0.0 < t < spec.horizon:
            out.append(Violation("impulse_range", "impulse outside (0, horizon)", f"t_{q}={t}"))
    return out


def _check_shapes_and_samples(spec: ProblemSpec) -> List[Violation]:
    out: List[Violation] = []
    dim = spec.state_dim
    if dim < 1 or not spec.horizon > 0.0:
        return out

    if spec.b_op.ndim != 2 or spec.b_op.shape[0] != dim:
        out.append(Violation("shape", "b_op has wrong shape", f"got {spec.b_op.shape}, expected ({dim}, m)"))
    elif not np.all(np.isfinite(spec.b_op)):
        out.append(Violation("non_finite", "non-finite sample of b_op", "matrix"))
    if spec.v0.shape != (dim,):
        out.append(Violation("shape", "v0 has wrong shape", f"got {spec.v0.shape}, expected ({dim},)"))
    if spec.v0_neutral is not None and spec.v0_neutral.shape != (dim,):
        out.append(Violation("shape", "v0_neutral has wrong shape", f"got {spec.v0_neutral.shape}"))

    vec = (dim,)
    mat = (dim, dim)
    times = np.linspace(0.0, spec.horizon, PROBE_TIMES)

    history_offsets = spec.history.sample_offsets(PROBE_TIMES) if spec.history.memory_window > 0 else np.zeros(1)
    for theta in history_offsets:
        out += _probe(lambda: spec.history(theta), "history", f"θ={theta:.4g}", vec)
    if out:
        return sorted(set(out))

    states = [np.zeros(dim), np.ones(dim), spec.initial_state()]
    for t in times:
        out += _probe(lambda: spec.a_op(t), "a_op", f"t={t:.4g}", mat)
        for s in times[times <= t]:
            out += _probe(lambda: spec.kernel(t, s), "kernel", f"(t, s)=({t:.4g}, {s:.4g})", mat)
        for k, x in enumerate(states):
            out += _probe(lambda: spec.f1(t, x), "f1", f"t={t:.4g}, probe state {k}", vec)
            segment = HistorySegment.constant(x, window=max(spec.history.memory_window, 1.0), anchor=t)
            out += _probe(lambda: spec.f2(t, segment), "f2", f"t={t:.4g}, probe segment {k}", vec)

    for q, (I_q, J_q) in enumerate(zip(spec.impulses.jump_state, spec.impulses.jump_velocity), start=1):
        for k, x in enumerate(states):
            out += _probe(lambda: I_q(x), f"I_{q}", f"probe state {k}", vec)
            out += _probe(lambda: J_q(x), f"J_{q}", f"probe state {k}", vec)
    return out


def _check_history_continuity(spec: ProblemSpec) -> List[Violation]:
    if spec.history.memory_window <= 0.0 or spec.state_dim < 1:
        return []
    try:
        coarse = spec.history.continuity_modulus(CONTINUITY_COARSE)
        fine = spec.history.continuity_modulus(CONTINUITY_FINE)
    except Exception as e:  # reported by the sampling check
        logger.debug(f"History continuity probe skipped: {e}")
        return []
    if fine > CONTINUITY_FLOOR and fine > 0.5 * coarse:
        return [Violation(
            "history_continuity",
            "history not continuous",
            f"modulus {fine:.3g} at {CONTINUITY_FINE} samples vs {coarse:.3g} at {CONTINUITY_COARSE}",
        )]
    return []


CHECKS = (_check_scalars, _check_impulses, _check_shapes_and_samples, _check_history_continuity)


def validate_spec(spec: ProblemSpec) -> List[Violation]:
    """Every structural violation of the spec, sorted; empty means admissible for solving."""
    found = set()
    for check in CHECKS:
        found.update(check(spec))
    return sorted(found)


def validation_report(spec: ProblemSpec, rank_tol: Optional[float] = None) -> Dict[str, Any]:
    """Violations plus the control-rank diagnosis."""
    violations = validate_spec(spec)
    rank = control_rank(spec, rank_tol) if spec.b_op.ndim == 2 and spec.b_op.shape[0] == spec.state_dim else 0
    return {
        'violations': [{'code': v.code, 'message': v.message, 'detail': v.detail} for v in violations],
        'admissible': not violations,
        'control_rank': rank,
        'state_dim': spec.state_dim,
    }
