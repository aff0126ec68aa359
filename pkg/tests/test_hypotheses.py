import numpy as np
import pytest

from helpers import diagonal_spec
from nidc.errors import NonFiniteSampleError
from nidc.model.hypotheses import HypothesisReport, check_existence_condition, estimate_constants, probe_lattice
from nidc.model.registry import JUMP, NEUTRAL
from nidc.model.spec import ImpulseSchedule
from nidc.resolvent.family import build_resolvent_grid
from nidc.resolvent.grid import TimeGrid


def _estimate(spec, step=1e-2, radius=1.0, level=3):
    grid = TimeGrid.uniform(spec.horizon, step, spec.impulses.times)
    res = build_resolvent_grid(spec, grid)
    return estimate_constants(spec, grid, res, radius, level=level)


def _full_counts(value=100):
    return {name: value for name in ('resolvent', 'sigma', 'r1', 'r2', 'L2')}


def _saturation_impulses():
    saturation = JUMP.build("saturation", {"scale": 1.0}, 1)
    zero = JUMP.build("zero", {}, 1)
    linear = JUMP.build("linear", {"scale": 0.25}, 1)
    return ImpulseSchedule(
        times=[0.3, 0.6],
        jump_state=[saturation, linear],
        jump_velocity=[zero, saturation],
    )


def test_sine_family_constants():
    report = _estimate(diagonal_spec([1.0], horizon=np.pi))
    assert report.M1_est <= 1.0 + 1e-3
    assert report.M1_est == pytest.approx(1.0, abs=1e-3)
    assert report.M2_est == pytest.approx(1.0, abs=1e-3)


def test_zero_forcing_has_zero_sigma():
    report = _estimate(diagonal_spec([1.0, 2.0]))
    assert report.sigma_est == 0.0
    assert report.r1_est == 0.0 and report.r2_est == 0.0 and report.L2_est == 0.0
    assert report.h1_est == 0.0 and report.h2_est == 0.0


def test_bounded_forcing_sigma():
    spec = diagonal_spec([1.0], f1=lambda t, x: 0.5 * np.tanh(x), state_free=False)
    report = _estimate(spec, radius=2.0)
    # ν_r(t) = 0.5 tanh(2) for every t, L² norm over [0, 1]
    assert report.sigma_est == pytest.approx(0.5 * np.tanh(2.0) / 2.0, rel=1e-9)


def test_delayed_neutral_constants():
    spec = diagonal_spec([1.0], f2=NEUTRAL.build("delayed_linear", {"scale": 0.1, "delay": 0.2}, 1))
    report = _estimate(spec)
    assert report.r1_est == pytest.approx(0.0, abs=1e-12)
    assert report.r2_est == pytest.approx(0.1, rel=1e-9)
    assert report.L2_est == pytest.approx(0.1, rel=1e-9)


def test_saturation_impulse_bound():
    spec = diagonal_spec([1.0], impulses=_saturation_impulses())
    radius = 1.0
    report = _estimate(spec, radius=radius)
    assert len(report.dq_est) == 2
    assert report.dq_est[0] >= 0.5 * radius / (radius + 1.0) - 1e-12
    assert report.eq_est[0] == 0.0
    assert report.dq_est[1] <= 0.25


def test_memory_constants_present():
    spec = diagonal_spec([1.0], kernel=lambda t, s: np.array([[np.exp(-(t - s))]]))
    report = _estimate(spec)
    assert report.h1_est > 0.0
    assert report.h2_est > 0.0
    assert report.sample_counts['h1'] >= 8


def test_small_report_holds():
    report = HypothesisReport(M1_est=0.1, M2_est=0.1, sample_counts=_full_counts())
    verdict = check_existence_condition(report, diagonal_spec([1.0]))
    assert verdict.lhs == pytest.approx(0.3)
    assert verdict.verdict == "holds"
    assert verdict.under_probed == []


def test_short_horizon_fails():
    spec = diagonal_spec([1.0], horizon=0.1)
    report = _estimate(spec, step=1e-3)
    verdict = check_existence_condition(report, spec)
    assert verdict.lhs == pytest.approx(2.0 * np.sin(0.1) + 1.0, abs=1e-3)
    assert verdict.verdict == "fails"
    assert report.existence_lhs == pytest.approx(verdict.lhs)


def test_under_probed_is_inconclusive():
    counts = _full_counts()
    counts['sigma'] = 3
    report = HypothesisReport(M1_est=0.1, M2_est=0.1, sample_counts=counts)
    verdict = check_existence_condition(report, diagonal_spec([1.0]), min_probes=8)
    assert verdict.verdict == "inconclusive"
    assert verdict.under_probed == ["sigma"]


def test_lattice_is_nested():
    coarse = probe_lattice(3, 2.0, 2)
    fine = probe_lattice(3, 2.0, 3)
    assert np.array_equal(coarse[0], np.zeros(3))
    fine_rows = {tuple(np.round(row, 12)) for row in fine}
    assert all(tuple(np.round(row, 12)) in fine_rows for row in coarse)


def test_estimates_monotone_in_level():
    spec = diagonal_spec(
        [1.0, 2.0],
        f1=lambda t, x: 0.2 * np.sin(x),
        f2=NEUTRAL.build("delayed_saturation", {"scale": 0.05, "delay": 0.1}, 2),
        state_free=False,
    )
    low = _estimate(spec, radius=3.0, level=1)
    high = _estimate(spec, radius=3.0, level=3)
    for name in ('sigma_est', 'r1_est', 'r2_est', 'L2_est'):
        assert getattr(high, name) >= getattr(low, name) - 1e-15


def test_impulse_permutation_invariance():
    spec = diagonal_spec([1.0], impulses=_saturation_impulses())
    swapped = spec.with_impulses(spec.impulses.permuted([1, 0]))
    a = _estimate(spec)
    b = _estimate(swapped)
    assert sorted(a.dq_est) == sorted(b.dq_est)
    assert sorted(a.eq_est) == sorted(b.eq_est)
    assert check_existence_condition(a, spec).lhs == pytest.approx(check_existence_condition(b, swapped).lhs)


def test_non_finite_sample_names_map():
    spec = diagonal_spec([1.0], f1=lambda t, x: np.full(1, np.nan), state_free=False)
    with pytest.raises(NonFiniteSampleError, match="f1"):
        _estimate(spec)
