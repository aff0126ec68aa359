import numpy as np
import pytest

from helpers import SCENARIO_DIR, diagonal_spec
from nidc.errors import DomainError, PicardDivergenceError
from nidc.model.config import build_spec, load_scenario
from nidc.model.registry import JUMP
from nidc.model.spec import HistoryFunction, ImpulseSchedule
from nidc.resolvent.family import build_resolvent_grid
from nidc.resolvent.grid import TimeGrid
from nidc.solver.mild_map import evaluate_mild_map
from nidc.solver.picard import picard_solve
from nidc.solver.reference import integrate_reference
from nidc.solver.trajectory import ControlSignal, Trajectory, apply_jump, segment_history


def _solve(spec, step=1e-3, control=None, impulse_times=()):
    grid = TimeGrid.uniform(spec.horizon, step, impulse_times)
    res = build_resolvent_grid(spec, grid)
    return picard_solve(spec, res, control)


def _constant_jump(value):
    return lambda x: np.array([value])


def _zero_jump(x):
    return np.zeros(1)


class TestMildMap:
    def test_free_wave(self):
        a, b = 0.7, -0.3
        spec = diagonal_spec([1.0], horizon=2 * np.pi, phi0=[a], v0=[b])
        traj, _ = _solve(spec)
        t = traj.grid.nodes
        assert np.max(np.abs(traj.values[:, 0] - (a * np.cos(t) + b * np.sin(t)))) <= 5e-6

    def test_constant_forcing(self):
        a, b, c = 1.0, 0.5, 0.25
        spec = diagonal_spec([1.0], horizon=1.0, phi0=[a], v0=[b], f1=lambda t, x: np.array([c]), state_free=True)
        traj, _ = _solve(spec)
        t = traj.grid.nodes
        expected = a * np.cos(t) + b * np.sin(t) + c * (1.0 - np.cos(t))
        assert np.max(np.abs(traj.values[:, 0] - expected)) <= 5e-6

    def test_single_velocity_impulse(self):
        t1, J = 0.4, 0.3
        impulses = ImpulseSchedule(times=[t1], jump_state=[_zero_jump], jump_velocity=[_constant_jump(J)])
        spec = diagonal_spec([1.0], phi0=[1.0], impulses=impulses)
        traj, _ = _solve(spec, impulse_times=[t1])
        t = traj.grid.nodes
        expected = np.cos(t) + np.where(t > t1, J * np.sin(t - t1), 0.0)
        assert np.max(np.abs(traj.values[:, 0] - expected)) <= 5e-6

    def test_single_state_impulse_records_both_limits(self):
        t1, I = 0.5, 0.2
        impulses = ImpulseSchedule(times=[t1], jump_state=[_constant_jump(I)], jump_velocity=[_zero_jump])
        spec = diagonal_spec([1.0], phi0=[1.0], impulses=impulses)
        traj, _ = _solve(spec, impulse_times=[t1])
        node = traj.grid.node_of(t1)
        assert traj.left_limits[node][0] == pytest.approx(np.cos(t1), abs=5e-6)
        assert traj.values[node][0] - traj.left_limits[node][0] == pytest.approx(I, abs=1e-12)
        t = traj.grid.nodes
        expected = np.cos(t) + np.where(t >= t1, I * np.cos(t - t1), 0.0)
        assert np.max(np.abs(traj.values[:, 0] - expected)) <= 5e-6

    def test_initial_node_is_history_value(self):
        spec = diagonal_spec([2.0], phi0=[0.3], v0=[1.0])
        res = build_resolvent_grid(spec, TimeGrid.uniform(1.0, 1e-2))
        guess = Trajectory.constant(res.grid, np.array([5.0]))
        out = evaluate_mild_map(spec, res, guess, ControlSignal.zeros(res.grid, 1))
        assert out.values[0, 0] == 0.3


class TestSegmentHistory:
    def test_splices_trajectory_and_history(self):
        v = np.array([0.5, -1.0])
        hist = HistoryFunction(memory_window=1.0, phi=lambda theta: np.exp(theta) * v)
        grid = TimeGrid.uniform(1.0, 1e-2)
        slope = np.array([2.0, 3.0])
        traj = Trajectory(grid=grid, values=v + np.outer(grid.nodes, slope))
        t = 0.5
        segment = segment_history(traj, hist, t)
        assert np.allclose(segment(0.0), v + t * slope, atol=1e-12)
        for theta in (-0.1, -0.3, -0.5, -0.7, -0.9):
            s = t + theta
            expected = v + s * slope if s >= 0.0 else np.exp(s) * v
            assert np.allclose(segment(theta), expected, atol=1e-9)

    def test_anchor_outside_horizon(self):
        grid = TimeGrid.uniform(1.0, 0.1)
        traj = Trajectory.constant(grid, np.zeros(1))
        hist = HistoryFunction(memory_window=1.0, phi=lambda theta: np.zeros(1))
        with pytest.raises(DomainError):
            segment_history(traj, hist, 1.5)

    def test_positive_offset_is_rejected(self):
        grid = TimeGrid.uniform(1.0, 0.1)
        traj = Trajectory.constant(grid, np.zeros(1))
        hist = HistoryFunction(memory_window=1.0, phi=lambda theta: np.zeros(1))
        with pytest.raises(DomainError):
            segment_history(traj, hist, 0.5)(0.1)


class TestApplyJump:
    def _spec(self, jump):
        impulses = ImpulseSchedule(times=[0.5], jump_state=[jump], jump_velocity=[_zero_jump])
        return diagonal_spec([1.0], impulses=impulses)

    def test_saturation_jump(self):
        spec = self._spec(JUMP.build("saturation", {"scale": 1.0}, 1))
        grid = TimeGrid.uniform(1.0, 0.1, [0.5])
        jumped = apply_jump(Trajectory.constant(grid, np.ones(1)), 1, spec)
        node = grid.node_of(0.5)
        assert jumped.left_limits[node][0] == 1.0
        assert jumped.values[node][0] == pytest.approx(1.5)
        assert jumped.jumps()[node][0] == pytest.approx(0.5)

    def test_zero_jump_keeps_values(self):
        spec = self._spec(_zero_jump)
        grid = TimeGrid.uniform(1.0, 0.1, [0.5])
        before = Trajectory.constant(grid, np.array([2.0]))
        after = apply_jump(before, 1, spec)
        assert np.array_equal(after.values, before.values)

    @pytest.mark.parametrize("q", [0, 2])
    def test_index_out_of_range(self, q):
        spec = self._spec(_zero_jump)
        grid = TimeGrid.uniform(1.0, 0.1, [0.5])
        with pytest.raises(DomainError):
            apply_jump(Trajectory.constant(grid, np.zeros(1)), q, spec)


class TestPicard:
    def test_zero_problem_converges_in_one_iteration(self):
        traj, report = _solve(diagonal_spec([1.0, 2.0]), step=1e-2)
        assert report.iterations == 1
        assert report.converged
        assert traj.sup_norm() == 0.0

    def test_residual_below_tolerance(self):
        spec = diagonal_spec([1.0], phi0=[1.0], f1=lambda t, x: 0.1 * np.sin(x), state_free=False)
        traj, report = _solve(spec, step=1e-2)
        assert report.converged
        assert report.residual < 1e-10
        assert report.distances[-1] == report.residual
        assert report.ball_radius == pytest.approx(traj.sup_norm())

    def test_returned_iterate_is_a_fixed_point(self):
        impulses = ImpulseSchedule(
            times=[0.5],
            jump_state=[lambda x: 0.2 * np.tanh(x)],
            jump_velocity=[lambda x: 0.1 * np.cos(x)],
        )
        spec = diagonal_spec(
            [1.5],
            phi0=[1.0],
            v0=[0.5],
            f1=lambda t, x: 0.1 * np.sin(x),
            f2=lambda t, seg: 0.05 * np.tanh(seg(-0.2)),
            kernel=lambda t, s: np.array([[-0.5 * np.exp(-(t - s))]]),
            impulses=impulses,
        )
        res = build_resolvent_grid(spec, TimeGrid.uniform(1.0, 1e-2, [0.5]))
        control = ControlSignal.zeros(res.grid, 1)
        traj, report = picard_solve(spec, res, control, tol=1e-10)

        image = evaluate_mild_map(spec, res, traj, control)
        assert image.distance(traj) <= 1e-10
        assert report.fixed_point_residual == pytest.approx(image.distance(traj), abs=1e-15)

    def test_superposition(self):
        grid = TimeGrid.uniform(1.0, 1e-2)

        def run(phi0, v0, c, amplitude):
            spec = diagonal_spec([1.0, 3.0], phi0=phi0, v0=v0, f1=lambda t, x: np.asarray(c), state_free=True)
            res = build_resolvent_grid(spec, grid)
            control = ControlSignal.from_function(grid, lambda t: amplitude * np.array([np.sin(t), 1.0]), 2)
            return picard_solve(spec, res, control)[0]

        first = run([1.0, 0.0], [0.0, 0.5], [0.1, 0.2], 1.0)
        second = run([0.0, -2.0], [1.0, 0.0], [0.3, -0.1], -0.5)
        total = run([1.0, -2.0], [1.0, 0.5], [0.4, 0.1], 0.5)
        assert np.max(np.abs(first.values + second.values - total.values)) <= 1e-9

    def test_iteration_budget_exhausted(self):
        spec = diagonal_spec([1.0], phi0=[1.0])
        with pytest.raises(PicardDivergenceError) as info:
            picard_solve(spec, build_resolvent_grid(spec, TimeGrid.uniform(1.0, 1e-2)), max_iter=1)
        assert info.value.distances

    def test_bad_tolerance(self):
        spec = diagonal_spec([1.0])
        res = build_resolvent_grid(spec, TimeGrid.uniform(1.0, 1e-1))
        with pytest.raises(DomainError):
            picard_solve(spec, res, tol=0.0)


@pytest.mark.slow
def test_neutral_delay_matches_reference_integrator():
    spec = build_spec(load_scenario(SCENARIO_DIR / "delayed_neutral.yaml"))
    traj, report = _solve(spec, step=1e-3)
    assert report.converged
    reference = integrate_reference(spec, step=2e-4)
    gap = max(
        float(np.max(np.abs(traj.values[i] - reference.value_at(t))))
        for i, t in enumerate(traj.grid.nodes)
    )
    assert gap <= 1e-4


def test_halving_the_step_is_second_order():
    impulses = ImpulseSchedule(
        times=[0.5],
        jump_state=[lambda x: 0.2 * np.tanh(x)],
        jump_velocity=[lambda x: 0.1 * np.cos(x)],
    )
    spec = diagonal_spec(
        [2.0],
        phi0=[1.0],
        v0=[0.5],
        f1=lambda t, x: 0.1 * np.sin(x),
        kernel=lambda t, s: np.array([[-0.5 * np.exp(-(t - s))]]),
        impulses=impulses,
    )
    coarse, medium, fine = (_solve(spec, step=h, impulse_times=[0.5])[0] for h in (0.02, 0.01, 0.005))
    assert medium.grid.size == 2 * coarse.grid.size - 1
    assert fine.grid.size == 2 * medium.grid.size - 1

    first = np.max(np.abs(coarse.values - medium.values[::2]))
    second = np.max(np.abs(medium.values - fine.values[::2]))
    assert 3.0 <= first / second <= 5.0
