"""
Wave equation with memory on (0, 2π), Dirichlet ends, truncated to M sine modes.

    ∂²/∂t² [ϱ + £₂] = ∂²/∂y² [ϱ + £₂] + F(t)[ϱ + £₂]
                      + ∫₀ᵗ ħ(t - s) ∂²/∂y² [ϱ + £₂](s) ds + £₁(t, ϱ) + u(t, y)
    Δϱ(t_q, y)  = ∫ φ_q(ξ, y) ϱ(t_q, ξ)² / (π(1 + ϱ(t_q, ξ)²)) dξ
    Δϱ'(t_q, y) = ∫ ς_q(ξ, y) ϱ(t_q, ξ)⁴ / (2e²(1 + ϱ(t_q, ξ)⁴)) dξ
    ϱ(θ, y) = Φ(θ, y),  ∂ϱ/∂t(0, y) = b₁(y)

In modal coordinates A(t) = diag(-m²) + F(t)I and ζ(t, s) = ħ(t - s) diag(-m²).
£₁ and £₂ act componentwise on the modal vector. Impulse kernels are
separable, φ_q(ξ, y) = amplitude·sin(k ξ)·sin(n y); the jump integrals are
evaluated by quadrature on the reconstructed field.
"""

import logging
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from ..errors import ConfigError, NidcError, ScenarioError
from ..model import registry
from ..model.spec import HistoryFunction, ImpulseSchedule, ProblemSpec, zero_kernel
from .basis import ModeBasis, basis_functions, build_mode_basis, project_field

logger = logging.getLogger(__name__)

INTEGRAL_KIND = "integral"


def state_saturation(rho: np.ndarray) -> np.ndarray:
    """ϱ²/(π(1 + ϱ²)), bounded by 1/π."""
    return rho ** 2 / (np.pi * (1.0 + rho ** 2))


def velocity_saturation(rho: np.ndarray) -> np.ndarray:
    """ϱ⁴/(2e²(1 + ϱ⁴)), bounded by 1/(2e²)."""
    return rho ** 4 / (2.0 * np.e ** 2 * (1.0 + rho ** 4))


def integral_jump(
    basis: ModeBasis,
    amplitude: float,
    xi_mode: int,
    y_mode: int,
    saturation: Callable[[np.ndarray], np.ndarray],
) -> Callable[[np.ndarray], np.ndarray]:
    """
    Modal form of x ↦ ∫ φ(ξ, ·) g(ϱ(ξ)) dξ with φ(ξ, y) = amplitude·sin(k ξ)·sin(n y).

    Returns x ↦ amplitude · ⟨sin(n·), ϑ_m⟩_m · Σ_i w_i sin(k ξ_i) g(ϱ(ξ_i)).
    """
    evaluation = basis.evaluation
    weights = basis.weights
    xi_profile = np.sin(xi_mode * basis.nodes)
    y_coeffs = project_field(basis, lambda y: np.sin(y_mode * np.asarray(y)))
    direction = amplitude * y_coeffs

    def jump(x: np.ndarray) -> np.ndarray:
        rho = evaluation @ np.asarray(x, dtype=float)
        return direction * float(np.dot(weights, xi_profile * saturation(rho)))

    return jump


def _jump_map(basis: ModeBasis, block: Dict[str, Any], saturation, dim: int):
    block = dict(block or {'kind': 'zero'})
    kind = block.pop('kind', 'zero')
    if kind == INTEGRAL_KIND:
        return integral_jump(
            basis,
            amplitude=float(block.get('amplitude', 0.1)),
            xi_mode=int(block.get('xi_mode', 1)),
            y_mode=int(block.get('y_mode', 1)),
            saturation=saturation,
        ), kind
    return registry.JUMP.build(kind, block, dim), kind


def _check_scalar_map(func: Callable[[float], float], name: str, horizon: float, samples: int = 257) -> None:
    for tau in np.linspace(0.0, horizon, samples):
        value = func(float(tau))
        if not np.isfinite(value):
            raise ScenarioError(f"{name} is not integrable on [0, {horizon}]: value {value} at τ={tau:.6g}")


def build_wave_memory_scenario(
    mode_count: int,
    horizon: float,
    kernel_h: Optional[Callable[[float], float]] = None,
    potential_F: Optional[Callable[[float], float]] = None,
    f1_params: Optional[Dict[str, Any]] = None,
    f2_params: Optional[Dict[str, Any]] = None,
    impulse_params: Optional[List[Dict[str, Any]]] = None,
    history_params: Optional[Dict[str, Any]] = None,
    velocity_field: Optional[Callable] = None,
    b_op: Optional[np.ndarray] = None,
    v0_neutral: Optional[np.ndarray] = None,
    name: str = "wave_memory",
    descriptor: Optional[Dict[str, Any]] = None,
) -> ProblemSpec:
    """
    Galerkin truncation of the wave-with-memory problem as a ProblemSpec.

    Args:
        mode_count: Number of retained sine modes M
        horizon: Final time ℓ
        kernel_h: Memory profile ħ(τ); None means no memory
        potential_F: Potential F(t); None means F ≡ 0
        f1_params: Registry block for £₁, e.g. {'kind': 'sine_saturation', 'scale': 0.05}
        f2_params: Registry block for £₂, e.g. {'kind': 'delayed_saturation', 'scale': 0.02, 'delay': 0.2}
        impulse_params: [{'time': t_q, 'state': {...}, 'velocity': {...}}]; kind 'integral'
            selects the saturation integral form with a separable sine kernel
        history_params: {'field': y ↦ Φ(0, y), 'rate': r, 'memory_window': τ}; Φ(θ, y) = e^{rθ}·field(y)
        velocity_field: b₁(y), the initial velocity profile
        b_op: Control injection in modal coordinates (default identity: u(t, y) enters directly)

    Raises:
        ScenarioError: non-finite history, velocity or kernel samples
    """
    basis = build_mode_basis(mode_count)
    dim = mode_count
    eigen = np.diag(basis.eigenvalues)
    eye = np.eye(dim)

    potential = potential_F or (lambda t: 0.0)
    _check_scalar_map(potential, "potential F", horizon)

    def a_op(t: float) -> np.ndarray:
        return eigen + potential(t) * eye

    if kernel_h is None:
        kernel = zero_kernel(dim)
    else:
        _check_scalar_map(kernel_h, "memory kernel ħ", horizon)

        def kernel(t: float, s: float) -> np.ndarray:
            return kernel_h(t - s) * eigen

    f1_params = dict(f1_params or {'kind': 'zero'})
    f2_params = dict(f2_params or {'kind': 'zero'})
    f1_kind = f1_params.pop('kind', 'zero')
    f2_kind = f2_params.pop('kind', 'zero')
    f1 = registry.FORCING.build(f1_kind, f1_params, dim)
    f2 = registry.NEUTRAL.build(f2_kind, f2_params, dim)

    history_params = dict(history_params or {})
    field = history_params.get('field') or (lambda y: np.zeros_like(np.asarray(y, dtype=float)))
    rate = float(history_params.get('rate', 0.0))
    memory_window = float(history_params.get('memory_window', 1.0))
    try:
        history_coeffs = project_field(basis, field)
        v0 = project_field(basis, velocity_field) if velocity_field is not None else np.zeros(dim)
    except NidcError as e:
        raise ScenarioError(f"history or velocity field cannot be projected: {e}") from e
    history_coeffs.setflags(write=False)

    def phi(theta: float) -> np.ndarray:
        return np.exp(rate * theta) * history_coeffs

    times, state_jumps, velocity_jumps, kinds = [], [], [], []
    for item in impulse_params or []:
        state_map, state_kind = _jump_map(basis, item.get('state'), state_saturation, dim)
        velocity_map, velocity_kind = _jump_map(basis, item.get('velocity'), velocity_saturation, dim)
        times.append(float(item['time']))
        state_jumps.append(state_map)
        velocity_jumps.append(velocity_map)
        kinds.append(f"{state_kind}/{velocity_kind}")

    state_free = (
        registry.FORCING.is_state_free(f1_kind)
        and f2_kind == 'zero'
        and all(
            all(registry.JUMP.is_state_free(part) for part in kind.split('/'))
            for kind in kinds
        )
    )

    logger.info(
        f"Wave scenario '{name}': M={dim}, ℓ={horizon}, memory={'on' if kernel_h else 'off'}, "
        f"{len(times)} impulses, quadrature panels={basis.panels}"
    )
    return ProblemSpec(
        state_dim=dim,
        horizon=float(horizon),
        a_op=a_op,
        kernel=kernel,
        f1=f1,
        f2=f2,
        b_op=np.eye(dim) if b_op is None else np.asarray(b_op, dtype=float),
        impulses=ImpulseSchedule(times=times, jump_state=state_jumps, jump_velocity=velocity_jumps, kinds=kinds),
        history=HistoryFunction(memory_window=memory_window, phi=phi),
        v0=v0,
        v0_neutral=v0_neutral,
        name=name,
        descriptor=descriptor or {'model': 'wave_memory', 'modes': dim},
        defect_is_state_free=state_free,
    )


def _field_callable(block) -> Optional[Callable]:
    if block is None:
        return None
    return registry.FIELD.build(block.kind, block.params, 1)


def build_from_config(config) -> ProblemSpec:
    """ScenarioConfig (model: wave_memory) -> ProblemSpec."""
    from ..model.config import MapBlock, build_b_op, scenario_to_dict

    dim = config.dim
    kernel_h = None
    if config.kernel_profile.kind != 'zero':
        kernel_h = registry.SCALAR.build(config.kernel_profile.kind, config.kernel_profile.params, dim)
    potential = registry.SCALAR.build(config.potential.kind, config.potential.params, dim)

    if isinstance(config.v0, MapBlock):
        velocity_field = _field_callable(config.v0)
    elif np.any(np.asarray(config.v0, dtype=float) != 0.0):
        raise ConfigError("v0 must be a field block for model 'wave_memory'", field="v0")
    else:
        velocity_field = None

    history_block = config.history
    if history_block.kind in registry.FIELD.factories:
        history_field = _field_callable(history_block)
    elif history_block.kind == 'constant' and not np.any(np.asarray(history_block.params.get('value', 0.0)) != 0.0):
        history_field = None
    else:
        raise ConfigError(
            f"history kind '{config.history.kind}' is not a field profile "
            f"(known: {', '.join(registry.FIELD.kinds())})",
            field="history.kind",
        )

    v0_neutral = None
    if config.v0_neutral is not None:
        v0_neutral = registry.as_vector(config.v0_neutral, dim, "v0_neutral")

    return build_wave_memory_scenario(
        mode_count=dim,
        horizon=config.horizon,
        kernel_h=kernel_h,
        potential_F=potential,
        f1_params={'kind': config.f1.kind, **config.f1.params},
        f2_params={'kind': config.f2.kind, **config.f2.params},
        impulse_params=[
            {
                'time': block.time,
                'state': {'kind': block.state.kind, **block.state.params},
                'velocity': {'kind': block.velocity.kind, **block.velocity.params},
            }
            for block in config.impulses
        ],
        history_params={
            'field': history_field,
            'rate': config.history_rate,
            'memory_window': config.memory_window,
        },
        velocity_field=velocity_field,
        b_op=build_b_op(config.b_op, dim),
        v0_neutral=v0_neutral,
        name=config.name,
        descriptor=scenario_to_dict(config),
    )
