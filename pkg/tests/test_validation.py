import numpy as np

from helpers import SCENARIO_DIR, diagonal_spec
from nidc.model.config import build_spec, load_scenario
from nidc.model.spec import HistoryFunction, ImpulseSchedule
from nidc.model.validation import validate_spec, validation_report


def _zero(x):
    return np.zeros(1)


def _messages(violations):
    return [v.message for v in violations]


def test_clean_spec_has_no_violations():
    assert validate_spec(diagonal_spec([1.0, 2.0])) == []


def test_unordered_impulses():
    impulses = ImpulseSchedule(times=[0.5, 0.3], jump_state=[_zero, _zero], jump_velocity=[_zero, _zero])
    violations = validate_spec(diagonal_spec([1.0], impulses=impulses))
    assert "impulse times not increasing" in _messages(violations)


def test_impulse_at_horizon():
    impulses = ImpulseSchedule(times=[1.0], jump_state=[_zero], jump_velocity=[_zero])
    assert "impulse at horizon" in _messages(validate_spec(diagonal_spec([1.0], impulses=impulses)))


def test_impulse_length_mismatch():
    impulses = ImpulseSchedule(times=[0.2, 0.4], jump_state=[_zero], jump_velocity=[_zero, _zero])
    assert "impulse schedule length mismatch" in _messages(validate_spec(diagonal_spec([1.0], impulses=impulses)))


def test_wrong_shape_map():
    spec = diagonal_spec([1.0, 2.0], f1=lambda t, x: np.zeros(3), state_free=False)
    assert "f1 has wrong shape" in _messages(validate_spec(spec))


def test_raising_map_is_reported():
    def broken(t, seg):
        raise RuntimeError("boom")

    violations = validate_spec(diagonal_spec([1.0], f2=broken))
    assert "f2 raised" in _messages(violations)
    assert any("boom" in v.detail for v in violations)


def test_discontinuous_history():
    history = HistoryFunction(memory_window=1.0, phi=lambda theta: np.array([1.0 if theta > -0.5 else 0.0]))
    assert "history not continuous" in _messages(validate_spec(diagonal_spec([1.0], history=history)))


def test_non_finite_sample():
    spec = diagonal_spec([1.0], f1=lambda t, x: np.array([np.inf]), state_free=False)
    assert "non-finite sample of f1" in _messages(validate_spec(spec))


def test_wave_scenario_is_clean():
    spec = build_spec(load_scenario(SCENARIO_DIR / "wave_memory.yaml"))
    assert validate_spec(spec) == []


def test_validation_is_idempotent_and_sorted():
    impulses = ImpulseSchedule(times=[0.5, 0.3, 1.0], jump_state=[_zero] * 3, jump_velocity=[_zero] * 3)
    spec = diagonal_spec([1.0], impulses=impulses)
    first = validate_spec(spec)
    assert first == validate_spec(spec)
    assert first == sorted(first)
    assert len(first) >= 2


def test_report_includes_control_rank():
    report = validation_report(diagonal_spec([1.0, 2.0], b_op=np.array([[1.0], [0.0]])))
    assert report['admissible']
    assert report['control_rank'] == 1
    assert report['state_dim'] == 2
