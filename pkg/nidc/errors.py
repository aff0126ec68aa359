"""
Exception hierarchy for nidc.

Everything raised on purpose by the package derives from NidcError so the
CLI can map failures to exit codes:

- ConfigError      -> exit 2 (unparseable or invalid scenario config)
- DivergenceError  -> exit 3 (resolvent blow-up, Picard / outer divergence)

Structural problems of a ProblemSpec are NOT exceptions; validate_spec
returns them as Violation records.
"""

from typing import List, Optional, Sequence


class NidcError(Exception):
    """Base class for all nidc errors"""


class ConfigError(NidcError):
    """Scenario config could not be parsed or failed schema validation."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        location = []
        if field:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}")
        suffix = f" ({', '.join(location)})" if location else ""
        super().__init__(f"{message}{suffix}")


class DomainError(NidcError, ValueError):
    """Argument outside the domain of an operation (s > t, eps <= 0, ...)."""


class NonFiniteSampleError(NidcError, ValueError):
    """A sampled map returned NaN or inf."""

    def __init__(self, map_name: str, where: str, detail: str = ""):
        self.map_name = map_name
        self.where = where
        message = f"non-finite sample of {map_name} at {where}"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class ScenarioError(NidcError, ValueError):
    """Modal scenario could not be assembled from its scalar data."""


class DivergenceError(NidcError):
    """Numerical procedure failed to converge or blew up."""

    def __init__(self, message: str, distances: Optional[Sequence[float]] = None):
        self.distances: List[float] = list(distances or [])
        super().__init__(message)


class ResolventBlowUpError(DivergenceError):
    """Resolvent norm exceeded the configured cap during time stepping."""


class PicardDivergenceError(DivergenceError):
    """Successive approximation did not reach the tolerance."""


class OuterLoopDivergenceError(DivergenceError):
    """Control-update loop did not reach the tolerance."""


class SweepMonotonicityError(DivergenceError):
    """A linear epsilon sweep produced a non-monotone terminal error column."""
