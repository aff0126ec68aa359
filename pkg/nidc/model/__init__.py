"""Problem description: ProblemSpec, map registry, scenario configs and validation."""

from .segment import HistorySegment
from .spec import HistoryFunction, ImpulseSchedule, ProblemSpec

__all__ = ["HistorySegment", "HistoryFunction", "ImpulseSchedule", "ProblemSpec"]
