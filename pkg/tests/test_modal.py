import numpy as np
import pytest

from helpers import SCENARIO_DIR
from nidc.errors import DomainError, NonFiniteSampleError, ScenarioError
from nidc.model.config import build_spec, load_scenario
from nidc.modal.basis import basis_functions, build_mode_basis, project_field, reconstruct_field
from nidc.modal.scenario import build_wave_memory_scenario


def mode(m):
    return lambda y: basis_functions([m], np.atleast_1d(y))[:, 0]


@pytest.fixture(scope="module")
def basis4():
    return build_mode_basis(4)


def test_quadrature_resolves_double_band(basis4):
    assert basis4.gram_error(extra_modes=4) <= 1e-10
    assert np.array_equal(basis4.eigenvalues, [-1.0, -4.0, -9.0, -16.0])


def test_project_basis_function(basis4):
    assert np.allclose(project_field(basis4, mode(2)), [0.0, 1.0, 0.0, 0.0], atol=1e-10)


def test_project_combination(basis4):
    coeffs = project_field(basis4, lambda y: 3.0 * mode(1)(y) + 4.0 * mode(3)(y))
    assert np.allclose(coeffs, [3.0, 0.0, 4.0, 0.0], atol=1e-10)


def test_reconstruct(basis4):
    y = np.array([0.3, 1.0, 2.5])
    values = reconstruct_field(basis4, [1.0, 0.0, 0.0, -2.0], y)
    assert np.allclose(values, mode(1)(y) - 2.0 * mode(4)(y), atol=1e-12)


def test_round_trip(basis4):
    def field(y):
        return mode(1)(y) - 2.0 * mode(2)(y)

    points = np.linspace(0.0, 2.0 * np.pi, 17)
    again = reconstruct_field(basis4, project_field(basis4, field), points)
    assert np.max(np.abs(again - field(points))) <= 1e-9


def test_parseval(basis4):
    def field(y):
        return 0.5 * mode(2)(y) + 1.5 * mode(4)(y)

    coeffs = project_field(basis4, field)
    assert np.linalg.norm(coeffs) == pytest.approx(basis4.l2_norm(field), rel=1e-10)


def test_reconstruct_shape_checked(basis4):
    with pytest.raises(DomainError):
        reconstruct_field(basis4, [1.0, 2.0], [0.5])


def test_non_finite_field(basis4):
    with pytest.raises(NonFiniteSampleError):
        project_field(basis4, lambda y: np.full_like(np.asarray(y, dtype=float), np.nan))


def test_mode_count_positive():
    with pytest.raises(DomainError):
        build_mode_basis(0)


def test_memory_kernel_entries():
    spec = build_wave_memory_scenario(3, 1.0, kernel_h=lambda tau: np.exp(-tau))
    t, s = 0.7, 0.2
    Z = spec.kernel(t, s)
    assert Z[1, 1] == pytest.approx(-4.0 * np.exp(-(t - s)))
    assert np.count_nonzero(Z - np.diag(np.diag(Z))) == 0
    assert np.allclose(spec.a_op(0.3), np.diag([-1.0, -4.0, -9.0]))


def test_history_in_first_mode():
    spec = build_wave_memory_scenario(
        6, 1.0, history_params={'field': lambda y: np.sin(np.asarray(y)), 'rate': 1.0, 'memory_window': 1.0}
    )
    phi = spec.history(-0.5)
    assert phi[0] == pytest.approx(np.exp(-0.5) * np.sqrt(np.pi), rel=1e-10)
    assert np.max(np.abs(phi[1:])) <= 1e-10


def test_integral_impulse_is_bounded():
    amplitude = 0.3
    spec = build_wave_memory_scenario(
        5,
        1.0,
        impulse_params=[{
            'time': 0.5,
            'state': {'kind': 'integral', 'amplitude': amplitude, 'xi_mode': 1, 'y_mode': 2},
            'velocity': {'kind': 'integral', 'amplitude': amplitude, 'xi_mode': 2, 'y_mode': 1},
        }],
    )
    bound = 2.0 * amplitude * np.sqrt(2.0 * np.pi)
    rng = np.random.default_rng(7)
    for scale in (0.1, 1.0, 10.0, 1e3):
        for x in scale * rng.standard_normal((20, 5)):
            assert np.linalg.norm(spec.impulses.jump_state[0](x)) <= bound
            assert np.linalg.norm(spec.impulses.jump_velocity[0](x)) <= bound
    assert not spec.defect_is_state_free


def test_non_integrable_kernel():
    with pytest.raises(ScenarioError):
        build_wave_memory_scenario(2, 1.0, kernel_h=lambda tau: 1.0 / tau if tau > 0 else np.inf)


def test_wave_memory_config():
    spec = build_spec(load_scenario(SCENARIO_DIR / "wave_memory.yaml"))
    assert spec.state_dim == 8
    assert spec.impulses.times == (0.4, 0.7)
    assert spec.history(0.0)[0] == pytest.approx(np.sqrt(np.pi), rel=1e-10)
