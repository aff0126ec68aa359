"""
Named registry of the maps a scenario config can select by `kind`.

Every entry is a factory `(params, dim) -> callable`. Scenario configs refer
to entries as {kind: "sine_saturation", scale: 0.1}; the config layer strips
`kind` and passes the remaining keys as params.

Families:
    forcing   £₁(t, x)
    neutral   £₂(t, ϑ_t)
    jump      I_q(x), J_q(x)
    history   Φ(θ)
    kernel    ζ(t, s)
    scalar    scalar maps of one time argument (potentials, kernel profiles)
    control   open-loop control signals u(t)
    field     physical profiles y ↦ ℝ on (0, 2π) for the wave scenario
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from ..errors import ConfigError
from .segment import HistorySegment
from .spec import zero_kernel

logger = logging.getLogger(__name__)

Factory = Callable[[Dict[str, Any], int], Callable]


def as_vector(value: Any, dim: int, name: str = "value") -> np.ndarray:
    """Broadcast a scalar or list parameter to a length-dim vector."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(dim, float(arr))
    arr = arr.reshape(-1)
    if arr.shape[0] != dim:
        raise ConfigError(f"expected {dim} entries, got {arr.shape[0]}", field=name)
    return arr


def as_matrix(value: Any, dim: int, name: str = "matrix") -> np.ndarray:
    """Scalar -> scalar·I, list -> diagonal, nested list -> dim×dim matrix."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(dim)
    if arr.ndim == 1:
        return np.diag(as_vector(arr, dim, name))
    if arr.shape != (dim, dim):
        raise ConfigError(f"expected {dim}x{dim} matrix, got shape {arr.shape}", field=name)
    return arr


@dataclass
class Registry:
    """One family of named factories."""

    family: str
    factories: Dict[str, Factory] = field(default_factory=dict)
    state_free: Dict[str, bool] = field(default_factory=dict)

    def register(self, kind: str, state_free: bool = False):
        def decorator(factory: Factory) -> Factory:
            self.factories[kind] = factory
            self.state_free[kind] = state_free
            return factory
        return decorator

    def kinds(self) -> List[str]:
        return sorted(self.factories)

    def is_state_free(self, kind: str) -> bool:
        return self.state_free.get(kind, False)

    def build(self, kind: str, params: Optional[Dict[str, Any]], dim: int) -> Callable:
        if kind not in self.factories:
            raise ConfigError(
                f"unknown {self.family} kind '{kind}' (known: {', '.join(self.kinds())})",
                field=f"{self.family}.kind",
            )
        try:
            return self.factories[kind](dict(params or {}), dim)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as e:
            raise ConfigError(f"bad parameters for {self.family} '{kind}': {e}", field=self.family) from e


FORCING = Registry("f1")
NEUTRAL = Registry("f2")
JUMP = Registry("impulse")
HISTORY = Registry("history")
KERNEL = Registry("kernel")
SCALAR = Registry("scalar")
CONTROL = Registry("control")
FIELD = Registry("field")


# =============================================================================
# £₁(t, x)
# =============================================================================

@FORCING.register("zero", state_free=True)
def _forcing_zero(params, dim):
    zeros = np.zeros(dim)
    return lambda t, x: zeros


@FORCING.register("constant", state_free=True)
def _forcing_constant(params, dim):
    value = as_vector(params.get("value", 0.0), dim, "f1.value")
    return lambda t, x: value


@FORCING.register("linear")
def _forcing_linear(params, dim):
    matrix = as_matrix(params.get("matrix", params.get("scale", 0.0)), dim, "f1.matrix")
    return lambda t, x: matrix @ x


@FORCING.register("sine_saturation")
def _forcing_sine(params, dim):
    """scale·sin(x) componentwise, ‖£₁‖_∞ <= scale."""
    scale = float(params.get("scale", 0.1))
    return lambda t, x: scale * np.sin(x)


@FORCING.register("tanh_saturation")
def _forcing_tanh(params, dim):
    scale = float(params.get("scale", 0.1))
    return lambda t, x: scale * np.tanh(x)


# =============================================================================
# £₂(t, ϑ_t)
# =============================================================================

@NEUTRAL.register("zero", state_free=True)
def _neutral_zero(params, dim):
    zeros = np.zeros(dim)
    return lambda t, segment: zeros


@NEUTRAL.register("delayed_linear")
def _neutral_delayed_linear(params, dim):
    """scale·ψ(-delay)"""
    scale = float(params.get("scale", 0.1))
    delay = float(params.get("delay", 0.2))
    if delay < 0.0:
        raise ConfigError("delay must be nonnegative", field="f2.delay")

    def neutral(t: float, segment: HistorySegment) -> np.ndarray:
        return scale * segment(-delay)
    return neutral


@NEUTRAL.register("delayed_saturation")
def _neutral_delayed_saturation(params, dim):
    """scale·tanh(ψ(-delay)), bounded by scale componentwise."""
    scale = float(params.get("scale", 0.02))
    delay = float(params.get("delay", 0.2))
    if delay < 0.0:
        raise ConfigError("delay must be nonnegative", field="f2.delay")

    def neutral(t: float, segment: HistorySegment) -> np.ndarray:
        return scale * np.tanh(segment(-delay))
    return neutral


# =============================================================================
# I_q(x), J_q(x)
# =============================================================================

@JUMP.register("zero", state_free=True)
def _jump_zero(params, dim):
    zeros = np.zeros(dim)
    return lambda x: zeros


@JUMP.register("constant", state_free=True)
def _jump_constant(params, dim):
    value = as_vector(params.get("value", 0.0), dim, "impulse.value")
    return lambda x: value


@JUMP.register("linear")
def _jump_linear(params, dim):
    scale = float(params.get("scale", 0.5))
    return lambda x: scale * np.asarray(x, dtype=float)


@JUMP.register("saturation")
def _jump_saturation(params, dim):
    """scale·x²/(1+x²) componentwise."""
    scale = float(params.get("scale", 1.0))

    def jump(x):
        x = np.asarray(x, dtype=float)
        return scale * x ** 2 / (1.0 + x ** 2)
    return jump


# =============================================================================
# Φ(θ)
# =============================================================================

@HISTORY.register("constant")
def _history_constant(params, dim):
    value = as_vector(params.get("value", 0.0), dim, "history.value")
    return lambda theta: value


@HISTORY.register("exponential")
def _history_exponential(params, dim):
    """value·exp(rate·θ)"""
    value = as_vector(params.get("value", 1.0), dim, "history.value")
    rate = float(params.get("rate", 1.0))
    return lambda theta: value * np.exp(rate * theta)


@HISTORY.register("cosine")
def _history_cosine(params, dim):
    """value·cos(frequency·θ) + velocity·sin(frequency·θ)/frequency"""
    value = as_vector(params.get("value", 1.0), dim, "history.value")
    velocity = as_vector(params.get("velocity", 0.0), dim, "history.velocity")
    frequency = float(params.get("frequency", 1.0))
    if frequency <= 0.0:
        raise ConfigError("frequency must be positive", field="history.frequency")
    return lambda theta: value * np.cos(frequency * theta) + velocity * np.sin(frequency * theta) / frequency


# =============================================================================
# Scalar time profiles
# =============================================================================

@SCALAR.register("zero")
def _scalar_zero(params, dim):
    return lambda tau: 0.0


@SCALAR.register("constant")
def _scalar_constant(params, dim):
    value = float(params.get("value", 0.0))
    return lambda tau: value


@SCALAR.register("exponential")
def _scalar_exponential(params, dim):
    """scale·exp(-rate·τ)"""
    scale = float(params.get("scale", 1.0))
    rate = float(params.get("rate", 1.0))
    return lambda tau: scale * float(np.exp(-rate * tau))


@SCALAR.register("sine")
def _scalar_sine(params, dim):
    amplitude = float(params.get("amplitude", 1.0))
    frequency = float(params.get("frequency", 1.0))
    return lambda tau: amplitude * float(np.sin(frequency * tau))


# =============================================================================
# ζ(t, s)
# =============================================================================

@KERNEL.register("zero", state_free=True)
def _kernel_zero(params, dim):
    return zero_kernel(dim)


@KERNEL.register("constant")
def _kernel_constant(params, dim):
    matrix = as_matrix(params.get("matrix", params.get("scale", 0.0)), dim, "kernel.matrix")
    matrix.setflags(write=False)
    return lambda t, s: matrix


@KERNEL.register("exponential")
def _kernel_exponential(params, dim):
    """scale·exp(-rate·(t-s))·matrix"""
    matrix = as_matrix(params.get("matrix", 1.0), dim, "kernel.matrix")
    scale = float(params.get("scale", 1.0))
    rate = float(params.get("rate", 1.0))
    return lambda t, s: scale * np.exp(-rate * (t - s)) * matrix


# =============================================================================
# u(t) for open-loop solves
# =============================================================================

@CONTROL.register("zero")
def _control_zero(params, dim):
    zeros = np.zeros(dim)
    return lambda t: zeros


@CONTROL.register("constant")
def _control_constant(params, dim):
    value = as_vector(params.get("value", 0.0), dim, "control.signal.value")
    return lambda t: value


@CONTROL.register("sine")
def _control_sine(params, dim):
    amplitude = as_vector(params.get("amplitude", 1.0), dim, "control.signal.amplitude")
    frequency = float(params.get("frequency", 1.0))
    return lambda t: amplitude * np.sin(frequency * t)


# =============================================================================
# Physical fields y ↦ ℝ on (0, 2π) (wave scenario)
# =============================================================================

@FIELD.register("zero")
def _field_zero(params, dim):
    return lambda y: np.zeros_like(np.asarray(y, dtype=float))


@FIELD.register("sine")
def _field_sine(params, dim):
    """amplitude·sin(wavenumber·y)"""
    amplitude = float(params.get("amplitude", 1.0))
    wavenumber = float(params.get("wavenumber", 1.0))
    return lambda y: amplitude * np.sin(wavenumber * np.asarray(y, dtype=float))


@FIELD.register("parabola")
def _field_parabola(params, dim):
    """amplitude·y(2π - y)/π², peak value amplitude at y = π."""
    amplitude = float(params.get("amplitude", 1.0))

    def profile(y):
        y = np.asarray(y, dtype=float)
        return amplitude * y * (2.0 * np.pi - y) / np.pi ** 2
    return profile


@FIELD.register("bump")
def _field_bump(params, dim):
    """amplitude·exp(-((y - center)/width)²)"""
    amplitude = float(params.get("amplitude", 1.0))
    center = float(params.get("center", np.pi))
    width = float(params.get("width", 0.5))
    if width <= 0.0:
        raise ConfigError("width must be positive", field="field.width")

    def profile(y):
        y = np.asarray(y, dtype=float)
        return amplitude * np.exp(-((y - center) / width) ** 2)
    return profile


def describe_registries() -> Dict[str, List[str]]:
    """Known kinds per family (used by the CLI help epilog and error messages)."""
    return {
        reg.family: reg.kinds()
        for reg in (FORCING, NEUTRAL, JUMP, HISTORY, KERNEL, SCALAR, CONTROL, FIELD)
    }
