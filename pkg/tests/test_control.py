import numpy as np
import pytest
import yaml

from helpers import SCENARIO_DIR, diagonal_spec
from nidc.control.gramian import (
    NEGATIVE_VERDICT,
    POSITIVE_VERDICT,
    assemble_gramian,
    default_probes,
    regularized_resolvent,
    test_linear_controllability as linear_controllability,
)
from nidc.control.sweep import epsilon_sweep
from nidc.control.synthesis import compute_defect, synthesize_control
from nidc.errors import DomainError
from nidc.model.config import build_spec, load_scenario
from nidc.model.spec import ImpulseSchedule
from nidc.resolvent.family import build_resolvent_grid
from nidc.resolvent.grid import TimeGrid
from nidc.solver.picard import picard_solve


def _setup(wavenumbers, b_op=None, step=1e-3, **kwargs):
    spec = diagonal_spec(wavenumbers, horizon=np.pi, b_op=b_op, **kwargs)
    res = build_resolvent_grid(spec, TimeGrid.uniform(np.pi, step))
    return spec, res, assemble_gramian(res, spec.b_op)


@pytest.fixture(scope="module")
def scalar_problem():
    return _setup([1.0])


def _steering_error(eps):
    return eps / (eps + np.pi / 2)


class TestGramian:
    def test_scalar_gramian(self, scalar_problem):
        _, _, package = scalar_problem
        assert package.gramian[0, 0] == pytest.approx(np.pi / 2, abs=1e-6)

    def test_two_mode_gramian_is_diagonal(self):
        _, _, package = _setup([1.0, 2.0], step=1e-3)
        G = package.gramian
        assert G[0, 0] == pytest.approx(np.pi / 2, abs=1e-6)
        assert G[1, 1] == pytest.approx(np.pi / 8, abs=1e-6)
        assert abs(G[0, 1]) <= 1e-12
        assert np.max(np.abs(G - G.T)) <= 1e-12
        assert np.all(package.eigenvalues >= -1e-12)
        assert package.lambda_max >= package.lambda_min

    def test_zero_control_operator(self):
        _, _, package = _setup([1.0], b_op=np.zeros((1, 1)), step=1e-2)
        assert np.all(package.gramian == 0.0)
        assert not package.is_positive_definite()


class TestRegularizedResolvent:
    def test_scalar_value(self, scalar_problem):
        _, _, package = scalar_problem
        V = regularized_resolvent(package, 0.5)
        assert V(np.array([1.0]))[0] == pytest.approx(1.0 / (0.5 + package.gramian[0, 0]))

    @pytest.mark.parametrize("eps", [10.0, 1.0, 1e-3])
    def test_scaled_norm_at_most_one(self, eps):
        _, _, package = _setup([1.0, 2.0, 3.0], step=1e-2)
        V = regularized_resolvent(package, eps)
        assert np.linalg.norm(eps * V.matrix(), 2) <= 1.0 + 1e-12

    def test_matches_dense_inverse(self):
        _, _, package = _setup([1.0, 2.0], step=1e-2)
        V = regularized_resolvent(package, 0.1)
        expected = np.linalg.inv(0.1 * np.eye(2) + package.gramian)
        assert np.allclose(V.matrix(), expected, atol=1e-10)

    @pytest.mark.parametrize("eps", [0.0, -1.0])
    def test_non_positive_eps(self, scalar_problem, eps):
        with pytest.raises(DomainError):
            regularized_resolvent(scalar_problem[2], eps)


class TestControllability:
    def test_full_rank_decays(self, scalar_problem):
        _, _, package = scalar_problem
        report = linear_controllability(package, [1e-1, 1e-2, 1e-3], np.array([[1.0]]))
        assert report.verdict == POSITIVE_VERDICT
        assert report.positive and report.positive_definite
        column = report.table[:, 0]
        assert np.all(np.diff(column) < 0.0)
        assert column[-1] == pytest.approx(_steering_error(1e-3), rel=1e-5)

    def test_kernel_probe_does_not_decay(self):
        _, _, package = _setup([1.0, 2.0], b_op=np.array([[1.0], [0.0]]), step=1e-2)
        probes = default_probes(package, count=3, seed=0)
        assert abs(probes[0] @ np.array([0.0, 1.0])) == pytest.approx(1.0)
        report = linear_controllability(package, [1e-1, 1e-2, 1e-3], probes)
        assert report.verdict == NEGATIVE_VERDICT
        assert not report.positive_definite
        assert report.table[-1, 0] == pytest.approx(1.0)

    def test_random_probes_meet_gramian_bound(self):
        _, _, package = _setup([1.0, 2.0, 3.0], step=1e-2)
        assert package.is_positive_definite()
        probes = np.random.default_rng(7).standard_normal((5, 3))
        eps_sequence = [1e-1, 1e-2, 1e-3]
        report = linear_controllability(package, eps_sequence, probes)
        assert report.verdict == POSITIVE_VERDICT
        bound = eps_sequence[-1] / package.lambda_min * np.linalg.norm(probes, axis=1) * (1.0 + 1e-6)
        assert np.all(report.table[-1] <= bound)
        assert np.all(np.diff(report.table, axis=0) < 0.0)

    @pytest.mark.parametrize("eps", [[], [0.1, 0.1], [0.01, 0.1], [0.1, -0.01]])
    def test_bad_sequences(self, scalar_problem, eps):
        with pytest.raises(DomainError):
            linear_controllability(scalar_problem[2], eps, np.array([[1.0]]))


class TestSynthesis:
    def test_defect_of_zero_data_is_target(self, scalar_problem):
        spec, res, _ = scalar_problem
        traj, _ = picard_solve(spec, res)
        assert compute_defect(spec, res, traj, np.array([1.0]))[0] == pytest.approx(1.0, abs=1e-12)

    def test_defect_subtracts_free_response(self):
        spec, res, _ = _setup([1.0], step=1e-3, phi0=[1.0])
        traj, _ = picard_solve(spec, res)
        # free response at π is cos π = -1
        assert compute_defect(spec, res, traj, np.array([0.0]))[0] == pytest.approx(1.0, abs=1e-5)

    @pytest.mark.parametrize("eps", [1e-1, 1e-2, 1e-3])
    def test_scalar_steering_error(self, scalar_problem, eps):
        spec, res, package = scalar_problem
        result = synthesize_control(spec, res, package, np.array([1.0]), eps)
        assert result.terminal_error == pytest.approx(_steering_error(eps), abs=1e-5)
        assert result.outer_iterations <= 2
        assert result.identity_residual <= 1e-6

    def test_reference_values(self, scalar_problem):
        spec, res, package = scalar_problem
        result = synthesize_control(spec, res, package, np.array([1.0]), 0.01)
        assert result.terminal_error == pytest.approx(6.326e-3, abs=1e-5)
        summary = result.summary()
        assert summary['epsilon'] == 0.01
        assert summary['control_energy'] > 0.0

    def test_free_endpoint_needs_no_control(self):
        spec, res, package = _setup([1.0, 2.0], step=1e-2, phi0=[0.5, -0.2], v0=[0.1, 0.3])
        free, _ = picard_solve(spec, res)
        result = synthesize_control(spec, res, package, free.terminal(), 0.01)
        assert result.control.sup_norm() <= 1e-10
        assert result.terminal_error <= 1e-10

    def test_zero_gramian_leaves_defect(self):
        spec, res, package = _setup([1.0], b_op=np.zeros((1, 1)), step=1e-2)
        result = synthesize_control(spec, res, package, np.array([1.0]), 0.01)
        assert result.control.sup_norm() == 0.0
        assert result.terminal_error == pytest.approx(np.linalg.norm(result.defect), abs=1e-12)

    def test_nonlinear_identity(self):
        spec, res, package = _setup(
            [1.0, 2.0], step=1e-2, phi0=[0.2, 0.1], f1=lambda t, x: 0.05 * np.sin(x), state_free=False
        )
        result = synthesize_control(spec, res, package, np.array([0.5, -0.5]), 0.05)
        assert result.identity_residual <= 1e-6

    def test_identity_with_neutral_delay_and_impulse(self):
        base = build_spec(load_scenario(SCENARIO_DIR / "delayed_neutral.yaml"))
        impulses = ImpulseSchedule(
            times=[1.0],
            jump_state=[lambda x: 0.1 * np.tanh(x)],
            jump_velocity=[lambda x: 0.05 * np.sin(x)],
        )
        spec = base.with_impulses(impulses)
        assert not spec.defect_is_state_free
        res = build_resolvent_grid(spec, TimeGrid.uniform(spec.horizon, 1e-2, spec.impulses.times))
        package = assemble_gramian(res, spec.b_op)
        target = np.array([0.5])
        result = synthesize_control(spec, res, package, target, 0.01)

        V = regularized_resolvent(package, 0.01)
        assert result.identity_residual <= 1e-6
        assert np.allclose(result.trajectory.terminal(), target - V.scaled(result.defect), atol=1e-6)

    def test_identity_on_reduced_wave_memory(self, tmp_path):
        data = yaml.safe_load((SCENARIO_DIR / "wave_memory.yaml").read_text())
        data["modes"] = 3
        data["solver"]["grid_step"] = 0.02
        path = tmp_path / "wave_small.yaml"
        path.write_text(yaml.safe_dump(data))

        spec = build_spec(load_scenario(path))
        assert spec.state_dim == 3 and spec.impulses.count == 2
        res = build_resolvent_grid(spec, TimeGrid.uniform(spec.horizon, 0.02, spec.impulses.times))
        package = assemble_gramian(res, spec.b_op)
        target = np.array([0.3, -0.1, 0.05])
        result = synthesize_control(spec, res, package, target, 0.01)

        V = regularized_resolvent(package, 0.01)
        assert result.identity_residual <= 1e-6
        assert np.allclose(result.trajectory.terminal(), target - V.scaled(result.defect), atol=1e-6)

    def test_target_shape_checked(self, scalar_problem):
        spec, res, package = scalar_problem
        with pytest.raises(DomainError):
            synthesize_control(spec, res, package, np.array([1.0, 2.0]), 0.1)


class TestSweep:
    def test_linear_sweep_rows(self, scalar_problem):
        spec, res, package = scalar_problem
        sweep = epsilon_sweep(spec, res, package, np.array([1.0]), [1e-1, 1e-2, 1e-3])
        expected = [_steering_error(eps) for eps in (1e-1, 1e-2, 1e-3)]
        for row, value in zip(sweep.rows, expected):
            assert row['terminal_error'] == pytest.approx(value, abs=1e-5)
        assert sweep.monotone and sweep.energy_monotone
        assert [r['epsilon'] for r in sweep.rows] == [1e-1, 1e-2, 1e-3]
        assert sweep.reduction_factor() > 50.0

    def test_rows_meet_gramian_bound(self):
        spec, res, package = _setup([1.0, 2.0, 3.0], step=1e-2, phi0=[0.3, -0.1, 0.2], v0=[0.0, 0.4, -0.2])
        target = np.random.default_rng(11).standard_normal(3)
        free, _ = picard_solve(spec, res)
        defect_norm = np.linalg.norm(compute_defect(spec, res, free, target))
        sweep = epsilon_sweep(spec, res, package, target, [1e-1, 1e-2, 1e-3])
        for row in sweep.rows:
            assert row['terminal_error'] <= row['epsilon'] / package.lambda_min * defect_norm * (1.0 + 1e-6)
        assert sweep.monotone

    @pytest.mark.parametrize("eps", [[], [0.01, 0.1], [0.1, 0.0]])
    def test_bad_lists(self, scalar_problem, eps):
        spec, res, package = scalar_problem
        with pytest.raises(DomainError):
            epsilon_sweep(spec, res, package, np.array([1.0]), eps)
