"""
Scenario config files.

A scenario is a YAML document validated by ScenarioConfig. Two flavours:

    model: explicit      operators given as matrices, maps picked from the registry
    model: wave_memory   modal wave-with-memory scenario (see nidc.modal.scenario)

Example (explicit):

    name: free_wave
    model: explicit
    horizon: 6.283185307179586
    state_dim: 1
    a_matrix: -1.0
    history: {kind: constant, value: 1.0}
    v0: 0.5
    impulses:
      - {time: 0.5, velocity: {kind: constant, value: 1.0}}
    control:
      target: [1.0]
      epsilons: [0.1, 0.01, 0.001]
    solver:
      grid_step: 0.001
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..errors import ConfigError
from ..settings import SolverSettings
from . import registry
from .spec import HistoryFunction, ImpulseSchedule, ProblemSpec

logger = logging.getLogger(__name__)

VectorLike = Union[float, List[float]]
MatrixLike = Union[float, List[float], List[List[float]]]


class MapBlock(BaseModel):
    """{kind: <registry name>, **params}"""

    model_config = ConfigDict(extra="allow")

    kind: str = "zero"

    @property
    def params(self) -> Dict[str, Any]:
        return dict(self.model_extra or {})


def _zero_block() -> MapBlock:
    return MapBlock(kind="zero")


class ImpulseBlock(BaseModel):
    """One impulse: time plus state jump I_q and velocity jump J_q."""

    model_config = ConfigDict(extra="forbid")

    time: float
    state: MapBlock = Field(default_factory=_zero_block)
    velocity: MapBlock = Field(default_factory=_zero_block)


class ControlBlock(BaseModel):
    """Control targets, regularization parameters and the open-loop signal for `solve`."""

    model_config = ConfigDict(extra="forbid")

    signal: MapBlock = Field(default_factory=_zero_block)
    target: Union[Literal["free"], MapBlock, VectorLike] = "free"
    epsilon: float = Field(default=0.01, gt=0.0)
    epsilons: List[float] = Field(default_factory=lambda: [0.1, 0.01, 0.001])
    probe_count: int = Field(default=5, ge=1)
    probe_seed: int = 0

    @field_validator("epsilons")
    @classmethod
    def _check_epsilons(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("epsilon list must not be empty")
        if any(eps <= 0.0 for eps in value):
            raise ValueError("epsilons must be positive")
        if any(b >= a for a, b in zip(value, value[1:])):
            raise ValueError("epsilons must be strictly decreasing")
        return value


class ScenarioConfig(BaseModel):
    """Parsed scenario file."""

    model_config = ConfigDict(extra="forbid")

    name: str = "scenario"
    model: Literal["explicit", "wave_memory"] = "explicit"
    horizon: float = Field(gt=0.0)

    # explicit flavour
    state_dim: Optional[int] = Field(default=None, ge=1)
    a_matrix: MatrixLike = 0.0
    kernel: MapBlock = Field(default_factory=_zero_block)

    # wave_memory flavour
    modes: Optional[int] = Field(default=None, ge=1)
    kernel_profile: MapBlock = Field(default_factory=_zero_block)

    # shared
    potential: MapBlock = Field(default_factory=_zero_block)
    f1: MapBlock = Field(default_factory=_zero_block)
    f2: MapBlock = Field(default_factory=_zero_block)
    b_op: Union[Literal["identity"], MatrixLike] = "identity"
    history: MapBlock = Field(default_factory=lambda: MapBlock(kind="constant", value=0.0))
    history_rate: float = 0.0
    memory_window: float = Field(default=1.0, ge=0.0)
    v0: Union[MapBlock, VectorLike] = 0.0
    v0_neutral: Optional[VectorLike] = None
    impulses: List[ImpulseBlock] = Field(default_factory=list)
    control: ControlBlock = Field(default_factory=ControlBlock)
    solver: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_flavour(self) -> "ScenarioConfig":
        if self.model == "explicit" and self.state_dim is None:
            raise ValueError("state_dim is required for model 'explicit'")
        if self.model == "wave_memory" and self.modes is None:
            raise ValueError("modes is required for model 'wave_memory'")
        try:
            SolverSettings(**self.solver)
        except ValidationError as e:
            first = e.errors()[0]
            raise ValueError(f"solver.{_field_from_loc(first.get('loc', ()))}: {first.get('msg')}")
        return self

    @property
    def dim(self) -> int:
        return int(self.state_dim if self.model == "explicit" else self.modes)

    def solver_settings(self, base: SolverSettings) -> SolverSettings:
        return base.merged(self.solver)


# =============================================================================
# Loading / dumping
# =============================================================================

def _field_from_loc(loc) -> str:
    return ".".join(str(part) for part in loc)


def parse_scenario(data: Dict[str, Any], source: str = "<dict>") -> ScenarioConfig:
    """Validate a raw mapping, re-raising pydantic errors as ConfigError."""
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    try:
        return ScenarioConfig(**data)
    except ValidationError as e:
        first = e.errors()[0]
        field = _field_from_loc(first.get("loc", ())) or None
        raise ConfigError(f"{source}: {first.get('msg', 'invalid value')}", field=field) from e


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    """
    Load and validate a scenario YAML file.

    Raises:
        ConfigError: missing file, YAML syntax error (with line) or schema error (with field)
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, 'r') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"{path.name}: YAML parse error: {getattr(e, 'problem', e)}", line=line) from e

    config = parse_scenario(data or {}, source=path.name)
    logger.info(f"📁 Loaded scenario '{config.name}' ({config.model}) from {path.name}")
    return config


def scenario_to_dict(config: ScenarioConfig) -> Dict[str, Any]:
    return config.model_dump(mode="json")


def dump_scenario(config: ScenarioConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    with open(path, 'w') as f:
        yaml.safe_dump(scenario_to_dict(config), f, sort_keys=True)
    return path


def scenario_hash(config: ScenarioConfig) -> str:
    """sha256 of the canonical JSON form; identical configs hash identically."""
    canonical = json.dumps(scenario_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# =============================================================================
# Spec construction
# =============================================================================

def build_spec(config: ScenarioConfig) -> ProblemSpec:
    """Turn a validated config into a ProblemSpec."""
    if config.model == "wave_memory":
        from ..modal.scenario import build_from_config
        return build_from_config(config)
    return _build_explicit(config)


def build_b_op(value: Union[str, MatrixLike], dim: int) -> np.ndarray:
    if isinstance(value, str):
        return np.eye(dim)
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 2:
        if arr.shape[0] != dim:
            raise ConfigError(f"b_op must have {dim} rows, got {arr.shape[0]}", field="b_op")
        return arr
    return registry.as_matrix(arr, dim, "b_op")


def _build_explicit(config: ScenarioConfig) -> ProblemSpec:
    dim = config.dim
    base = registry.as_matrix(config.a_matrix, dim, "a_matrix")
    base.setflags(write=False)
    potential = registry.SCALAR.build(config.potential.kind, config.potential.params, dim)
    eye = np.eye(dim)

    def a_op(t: float) -> np.ndarray:
        return base + potential(t) * eye

    kernel = registry.KERNEL.build(config.kernel.kind, config.kernel.params, dim)
    f1 = registry.FORCING.build(config.f1.kind, config.f1.params, dim)
    f2 = registry.NEUTRAL.build(config.f2.kind, config.f2.params, dim)
    phi = registry.HISTORY.build(config.history.kind, config.history.params, dim)

    state_jumps = [registry.JUMP.build(b.state.kind, b.state.params, dim) for b in config.impulses]
    velocity_jumps = [registry.JUMP.build(b.velocity.kind, b.velocity.params, dim) for b in config.impulses]
    impulses = ImpulseSchedule(
        times=[b.time for b in config.impulses],
        jump_state=state_jumps,
        jump_velocity=velocity_jumps,
        kinds=[f"{b.state.kind}/{b.velocity.kind}" for b in config.impulses],
    )

    if isinstance(config.v0, MapBlock):
        raise ConfigError("v0 must be a vector for model 'explicit'", field="v0")
    v0 = registry.as_vector(config.v0, dim, "v0")
    v0_neutral = None
    if config.v0_neutral is not None:
        v0_neutral = registry.as_vector(config.v0_neutral, dim, "v0_neutral")

    state_free = (
        registry.FORCING.is_state_free(config.f1.kind)
        and config.f2.kind == "zero"
        and all(
            registry.JUMP.is_state_free(b.state.kind) and registry.JUMP.is_state_free(b.velocity.kind)
            for b in config.impulses
        )
    )

    return ProblemSpec(
        state_dim=dim,
        horizon=config.horizon,
        a_op=a_op,
        kernel=kernel,
        f1=f1,
        f2=f2,
        b_op=build_b_op(config.b_op, dim),
        impulses=impulses,
        history=HistoryFunction(memory_window=config.memory_window, phi=phi),
        v0=v0,
        v0_neutral=v0_neutral,
        name=config.name,
        descriptor=scenario_to_dict(config),
        defect_is_state_free=state_free,
    )


def build_control_signal(config: ScenarioConfig, control_dim: int):
    """Open-loop u(t) from control.signal."""
    block = config.control.signal
    return registry.CONTROL.build(block.kind, block.params, control_dim)
