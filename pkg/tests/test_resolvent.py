import numpy as np
import pytest

from helpers import diagonal_spec, lower_mask, scalar_stack
from nidc.errors import DomainError, ResolventBlowUpError
from nidc.model.spec import HistoryFunction, ImpulseSchedule, ProblemSpec
from nidc.resolvent.bounds import verify_resolvent_bounds
from nidc.resolvent.family import build_resolvent_grid, build_sine_family, eval_dsR, eval_R
from nidc.resolvent.grid import TimeGrid


def _oracle_errors(m: float, step: float, horizon: float = 1.0):
    spec = diagonal_spec([m], horizon=horizon)
    grid = TimeGrid.uniform(horizon, step)
    res = build_resolvent_grid(spec, grid)
    tau = grid.nodes[:, None] - grid.nodes[None, :]
    mask = lower_mask(grid.size)
    err_R = np.max(np.abs(scalar_stack(res, "R") - np.sin(m * tau) / m)[mask])
    err_D = np.max(np.abs(scalar_stack(res, "dsR") + np.cos(m * tau))[mask])
    return err_R, err_D


@pytest.mark.parametrize("m", [1.0, 2.0, 4.0])
def test_sine_family_oracle(m):
    err_R, err_D = _oracle_errors(m, 1e-3)
    assert err_R <= 5e-6
    assert err_D <= 5e-6


@pytest.mark.parametrize("m", [2.0, 4.0])
def test_second_order_convergence(m):
    coarse_R, coarse_D = _oracle_errors(m, 2e-3)
    fine_R, fine_D = _oracle_errors(m, 1e-3)
    assert 3.2 <= coarse_R / fine_R <= 4.8
    assert 3.2 <= coarse_D / fine_D <= 4.8


def _coupled_memory_spec() -> ProblemSpec:
    A = np.array([[-1.0, 0.3], [0.2, -2.0]])
    K = np.array([[0.1, 0.05], [0.0, -0.2]])
    zeros = np.zeros(2)
    return ProblemSpec(
        state_dim=2,
        horizon=0.5,
        a_op=lambda t: A * (1.0 + 0.1 * t),
        kernel=lambda t, s: np.exp(-(t - s)) * K,
        f1=lambda t, x: zeros,
        f2=lambda t, seg: zeros,
        b_op=np.eye(2),
        impulses=ImpulseSchedule(),
        history=HistoryFunction(memory_window=0.0, phi=lambda theta: zeros),
        v0=zeros,
    )


def test_diagonal_identities_hold_exactly_for_full_matrices():
    spec = _coupled_memory_spec()
    grid = TimeGrid.uniform(spec.horizon, 5e-3, impulse_times=[0.123])
    res = build_resolvent_grid(spec, grid)
    assert not res.diagonal
    for i in range(grid.size):
        assert np.array_equal(res.node_matrix("R", i, i), np.zeros((2, 2)))
        assert np.array_equal(res.node_matrix("dsR", i, i), -np.eye(2))


def test_diagonal_identities_hold_exactly_per_mode():
    res = build_resolvent_grid(diagonal_spec([1.0, 3.0]), TimeGrid.uniform(1.0, 1e-2))
    assert res.diagonal
    idx = np.arange(res.grid.size)
    assert np.all(res.R[idx, idx] == 0.0)
    assert np.all(res.dsR[idx, idx] == -1.0)


def test_first_step_approximates_identity_derivative():
    spec = _coupled_memory_spec()
    for step in (1e-2, 1e-3):
        res = build_resolvent_grid(spec, TimeGrid.uniform(spec.horizon, step))
        h = res.grid.nodes[1]
        assert np.allclose(res.node_matrix("R", 1, 0) / h, np.eye(2), atol=2 * step)


def test_block_diagonal_spec_keeps_off_diagonal_zero():
    res = build_resolvent_grid(diagonal_spec([1.0, 2.0, 5.0]), TimeGrid.uniform(1.0, 1e-2))
    matrix = eval_R(res, 0.7, 0.2)
    assert np.max(np.abs(matrix - np.diag(np.diag(matrix)))) <= 1e-12


def test_kernel_off_family_is_shift_invariant():
    res = build_resolvent_grid(diagonal_spec([2.0]), TimeGrid.uniform(1.0, 1e-3))
    stack = scalar_stack(res, "R")
    shift = 100
    assert np.max(np.abs(stack[shift + 300, shift + 50] - stack[300, 50])) <= 1e-6


def test_eval_at_node_pair_returns_stored_matrix():
    res = build_resolvent_grid(diagonal_spec([1.0, 2.0]), TimeGrid.uniform(1.0, 1e-2))
    t, s = res.grid.nodes[40], res.grid.nodes[13]
    assert np.array_equal(eval_R(res, t, s), res.node_matrix("R", 40, 13))
    assert np.array_equal(eval_dsR(res, t, s), res.node_matrix("dsR", 40, 13))


def test_eval_on_off_node_diagonal_is_zero():
    res = build_resolvent_grid(diagonal_spec([1.0]), TimeGrid.uniform(1.0, 1e-2))
    assert np.max(np.abs(eval_R(res, 0.4567, 0.4567))) <= 1e-8


@pytest.mark.parametrize("m", [1.0, 2.0])
def test_eval_off_node_matches_oracle(m):
    res = build_resolvent_grid(diagonal_spec([m]), TimeGrid.uniform(1.0, 1e-3))
    value = eval_R(res, 0.513, 0.101)[0, 0]
    assert value == pytest.approx(np.sin(m * 0.412) / m, abs=1e-5)


def test_eval_above_diagonal_is_domain_error():
    res = build_resolvent_grid(diagonal_spec([1.0]), TimeGrid.uniform(1.0, 1e-2))
    with pytest.raises(DomainError):
        eval_R(res, 0.2, 0.3)
    with pytest.raises(DomainError):
        eval_dsR(res, 0.2, 0.3)


def test_bounds_for_unit_sine_family():
    res = build_resolvent_grid(diagonal_spec([1.0], horizon=np.pi), TimeGrid.uniform(np.pi, 1e-3))
    bounds = verify_resolvent_bounds(res)
    assert bounds.M1 == pytest.approx(1.0, abs=1e-4)
    assert bounds.M2 == pytest.approx(1.0, abs=1e-4)
    assert bounds.LR >= 0.0 and bounds.MR >= 0.0


def test_bounds_for_free_particle():
    res = build_resolvent_grid(diagonal_spec([0.0]), TimeGrid.uniform(1.0, 1e-2))
    bounds = verify_resolvent_bounds(res)
    assert bounds.LR == pytest.approx(1.0, abs=1e-6)
    assert bounds.M1 == pytest.approx(1.0, abs=1e-9)


def test_sine_family_ignores_memory():
    spec = diagonal_spec([1.0], kernel=lambda t, s: np.array([[-0.5 * np.exp(-(t - s))]]))
    grid = TimeGrid.uniform(1.0, 1e-2)
    with_memory = build_resolvent_grid(spec, grid)
    without = build_sine_family(spec, grid)
    assert without.memory_free and not with_memory.memory_free
    assert not np.allclose(scalar_stack(with_memory, "R"), scalar_stack(without, "R"))


def test_blow_up_is_reported():
    spec = diagonal_spec([0.0])
    growing = ProblemSpec(
        state_dim=1,
        horizon=1.0,
        a_op=lambda t: np.array([[400.0]]),
        kernel=spec.kernel,
        f1=spec.f1,
        f2=spec.f2,
        b_op=spec.b_op,
        impulses=spec.impulses,
        history=spec.history,
        v0=spec.v0,
    )
    with pytest.raises(ResolventBlowUpError, match="refine grid_step"):
        build_resolvent_grid(growing, TimeGrid.uniform(1.0, 1e-2), cap=1e4)


def test_grid_contains_impulse_times_and_endpoints():
    grid = TimeGrid.uniform(1.0, 0.03, impulse_times=[0.25, 0.7])
    assert grid.nodes[0] == 0.0 and grid.nodes[-1] == 1.0
    assert grid.impulse_aligned
    assert grid.nodes[grid.node_of(0.7)] == 0.7
    assert np.max(grid.steps) <= 0.03 + 1e-15
    with pytest.raises(DomainError):
        grid.bracket(1.5)


def test_cache_reuses_family(tmp_path):
    from nidc.resolvent.cache import load_or_build

    spec = diagonal_spec([1.0, 2.0], horizon=0.5)
    grid = TimeGrid.uniform(0.5, 0.01)
    first = load_or_build(spec, grid, cache_dir=tmp_path)
    files = list(tmp_path.glob("resolvent_*.bin"))
    assert len(files) == 1

    second = load_or_build(spec, grid, cache_dir=tmp_path)
    assert second.content_hash == first.content_hash
    assert np.array_equal(second.R, first.R)
    assert np.array_equal(second.dsR, first.dsR)


def test_cache_ignores_other_operators_and_corrupt_files(tmp_path):
    from nidc.resolvent.cache import load_or_build

    grid = TimeGrid.uniform(0.5, 0.01)
    a = load_or_build(diagonal_spec([1.0], horizon=0.5), grid, cache_dir=tmp_path)
    b = load_or_build(diagonal_spec([3.0], horizon=0.5), grid, cache_dir=tmp_path)
    assert a.content_hash != b.content_hash
    assert len(list(tmp_path.glob("resolvent_*.bin"))) == 2

    for path in tmp_path.glob("resolvent_*.bin"):
        path.write_bytes(b"garbage")
    rebuilt = load_or_build(diagonal_spec([1.0], horizon=0.5), grid, cache_dir=tmp_path)
    assert np.allclose(rebuilt.R, a.R)
