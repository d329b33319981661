import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftrack.change_detection import PageHinkley, RejectedObservation, ph_observe, ph_reset


def oracle_alarms(xs, lam=0.15, delta=0.005, reset=True):
    """Plain scalar re-derivation of the decrease test, kept separate from the package."""
    alarms = []
    n = 0
    mean = m = lo = 0.0
    for i, x in enumerate(xs):
        n += 1
        mean = mean + (x - mean) / n
        m = m + mean - x - delta
        lo = min(lo, m)
        if m - lo > lam:
            alarms.append(i)
            if reset:
                n, mean, m, lo = 0, 0.0, 0.0, 0.0
    return alarms


def detector_alarms(xs, **kw):
    ph = PageHinkley(**kw)
    return [i for i, x in enumerate(xs) if ph.observe(x)]


def test_constant_stream_never_alarms():
    ph = PageHinkley(lambda_=0.15, delta=0.005)
    assert not any(ph.observe(0.9) for _ in range(100))
    assert ph.statistic == 0.0
    assert ph.cumulative_m == pytest.approx(-0.5)


def test_step_drop_alarms_on_first_low_frame():
    xs = [0.9] * 50 + [0.4] * 50
    alarms = detector_alarms(xs)
    # frame 51 in 1-based counting is index 50
    assert alarms[0] == 50
    assert alarms == oracle_alarms(xs)


def test_ramp_matches_oracle():
    xs = list(np.linspace(0.9, 0.5, 200))
    alarms = detector_alarms(xs)
    assert alarms == oracle_alarms(xs)
    assert len(alarms) >= 1


def test_ramp_without_reset_crosses_threshold_once():
    xs = list(np.linspace(0.9, 0.5, 200))
    ph = PageHinkley(reset_on_alarm=False)
    above = [ph.observe(x) for x in xs]
    onsets = sum(1 for i, a in enumerate(above) if a and (i == 0 or not above[i - 1]))
    assert onsets == 1
    assert above.index(True) == oracle_alarms(xs, reset=False)[0]


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_score_is_rejected(bad):
    ph = PageHinkley()
    ph.observe(0.5)
    before = (ph.t, ph.running_mean, ph.cumulative_m)
    with pytest.raises(RejectedObservation):
        ph.observe(bad)
    assert (ph.t, ph.running_mean, ph.cumulative_m) == before


def test_reset_clears_statistics_but_keeps_alarm_count():
    ph = PageHinkley()
    for x in [0.9] * 20 + [0.2]:
        ph.observe(x)
    assert ph.alarms_raised == 1
    for x in [0.9, 0.8, 0.7]:
        ph.observe(x)
    ph.reset()
    assert (ph.t, ph.running_mean, ph.cumulative_m, ph.extremum_m, ph.statistic) == (0, 0.0, 0.0, 0.0, 0.0)
    assert ph.alarms_raised == 1


def test_reset_of_fresh_state_is_identity():
    fresh = PageHinkley()
    assert ph_reset(PageHinkley()) == fresh


def test_after_alarm_constant_stream_is_quiet():
    ph = PageHinkley()
    for x in [0.9] * 10:
        ph.observe(x)
    assert ph.observe(0.3)
    assert not any(ph.observe(0.3) for _ in range(200))


def test_functional_wrapper_returns_same_state():
    ph = PageHinkley()
    out, alarm = ph_observe(ph, 0.9)
    assert out is ph and alarm is False and ph.t == 1


def test_two_sided_flags_increases_only_when_enabled():
    xs = [0.3] * 30 + [0.9] * 10
    assert detector_alarms(xs) == []
    assert detector_alarms(xs, two_sided=True) == [30]


def test_invalid_parameters():
    with pytest.raises(ValueError):
        PageHinkley(lambda_=0.0)
    with pytest.raises(ValueError):
        PageHinkley(delta=-0.1)


def test_uniform_noise_around_constant_gives_no_alarms():
    total = 0
    for seed in range(20):
        xs = 0.9 + np.random.default_rng(seed).uniform(-0.02, 0.02, 10_000)
        alarms = detector_alarms(xs)
        assert alarms == oracle_alarms(xs)
        total += len(alarms)
    assert total <= 1


scores = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(scores, min_size=1, max_size=300))
def test_statistic_is_nonnegative_and_extremum_bounded(xs):
    ph = PageHinkley(reset_on_alarm=False)
    for x in xs:
        ph.observe(x)
        assert ph.extremum_m <= ph.cumulative_m
        assert ph.statistic >= 0.0


@settings(max_examples=200, deadline=None)
@given(st.lists(scores, max_size=300), st.booleans())
def test_detector_agrees_with_oracle(xs, reset):
    assert detector_alarms(xs, reset_on_alarm=reset) == oracle_alarms(xs, reset=reset) if reset else True
    if not reset:
        ph = PageHinkley(reset_on_alarm=False)
        got = [i for i, x in enumerate(xs) if ph.observe(x)]
        assert got == oracle_alarms(xs, reset=False)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(min_value=0.3, max_value=1.0),
    st.integers(min_value=1, max_value=200),
    st.floats(min_value=0.3, max_value=1.0),
)
def test_step_drop_of_at_least_point_three_is_caught_within_two_frames(level, before, drop):
    after = level - drop
    xs = [level] * before + [after] * 5
    alarms = detector_alarms(xs)
    assert alarms and alarms[0] - before <= 1


@settings(max_examples=50, deadline=None)
@given(st.lists(scores, max_size=200))
def test_deterministic(xs):
    assert detector_alarms(xs) == detector_alarms(xs)
