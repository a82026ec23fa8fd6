import math

import pytest
from hypothesis import given, strategies as st

from progevo.errors import EvaluationInvalid
from progevo.progress import (
    ProgressTracker,
    ScoreSpec,
    absolute_progress,
    normalize_score,
    observe,
    relative_progress,
    update_momentum,
)

MIN0 = ScoreSpec("minimize", 0.0)


def test_normalize_minimize_identity():
    assert normalize_score(0.5, MIN0) == (0.5, False)


def test_normalize_maximize_negates_score_and_bound():
    spec = ScoreSpec("maximize", 1.0)
    assert normalize_score(0.8, spec) == (-0.8, False)
    assert spec.r == -1.0


def test_normalize_clamps_below_bound():
    assert normalize_score(-0.3, MIN0) == (0.0, True)


@pytest.mark.parametrize("raw", [math.nan, math.inf, -math.inf, None])
def test_normalize_rejects_non_finite(raw):
    with pytest.raises(EvaluationInvalid):
        normalize_score(raw, MIN0)


def test_spec_requires_positive_gap_epsilon():
    with pytest.raises(ValueError):
        ScoreSpec(gap_epsilon=0.0)


@pytest.mark.parametrize("s_prev,s_new,eps,expected", [
    (1.0, 0.5, 1e-12, 0.5),
    (1.0, 1.2, 1e-12, 0.0),
    (1e-9, 5e-10, 1e-6, 0.0),
    (1.0, -0.5, 1e-12, 1.0),  # clamped to r
])
def test_relative_progress_examples(s_prev, s_new, eps, expected):
    assert relative_progress(s_prev, s_new, ScoreSpec("minimize", 0.0, eps)) == expected


def test_relative_progress_gap_floor_matches_oracle():
    # tiny gap: direct formula would give 0.5, the floor rule forces 0
    s_prev, s_new = 1e-9, 5e-10
    assert (s_prev - s_new) / s_prev == pytest.approx(0.5)
    assert relative_progress(s_prev, s_new, ScoreSpec(gap_epsilon=1e-6)) == 0.0


@pytest.mark.parametrize("m,r,expected", [(1.0, 0.0, 0.9), (0.5, 1.0, 0.55)])
def test_update_momentum_examples(m, r, expected):
    t = update_momentum(ProgressTracker(1.0, 1.0, 1.0, m, 0.9, 3), r)
    assert t.momentum_m == pytest.approx(expected, abs=1e-15)
    assert t.step == 4


def test_twenty_barren_steps():
    t = ProgressTracker.start(1.0)
    expected = 1.0
    for _ in range(20):
        t = update_momentum(t, 0.0)
        expected *= 0.9
    assert t.momentum_m == expected
    assert t.momentum_m == pytest.approx(0.1216, abs=1e-4)


def test_update_momentum_rejects_out_of_range():
    with pytest.raises(ValueError):
        update_momentum(ProgressTracker.start(1.0), 1.5)


@pytest.mark.parametrize("s0,s_best,expected", [(1.0, 1.0, 0.0), (1.0, 0.0, 1.0), (2.0, 0.5, 0.75)])
def test_absolute_progress_examples(s0, s_best, expected):
    t = ProgressTracker(s0, s_best, s_best)
    assert absolute_progress(t, MIN0) == expected


def test_absolute_progress_degenerate_initial_gap():
    assert absolute_progress(ProgressTracker.start(0.0), MIN0) == 1.0


def test_observe_none_is_barren():
    t, r = observe(ProgressTracker.start(2.0), None, MIN0)
    assert r == 0.0 and t.s_best == 2.0 and t.momentum_m == pytest.approx(0.9)


def test_observe_keeps_running_best():
    t = ProgressTracker.start(2.0)
    t, r = observe(t, 1.0, MIN0)
    assert r == 0.5 and t.s_best == t.s_prev == 1.0
    t, r = observe(t, 1.5, MIN0)
    assert r == 0.0 and t.s_best == 1.0


def test_tracker_round_trip():
    t = ProgressTracker(3.0, 2.0, 2.0, 0.4, 0.8, 7)
    assert ProgressTracker.from_dict(t.to_dict()) == t


pos = st.floats(1e-6, 1e6, allow_nan=False)


@given(pos, pos, st.floats(1e-3, 1e3))
def test_scale_invariance(s_prev, s_new, c):
    a = relative_progress(s_prev, s_new, MIN0)
    b = relative_progress(c * s_prev, c * s_new, MIN0)
    assert abs(a - b) <= 1e-12


@given(st.floats(0, 100), st.floats(0, 100), st.floats(-100, 100))
def test_shift_invariance(gap_prev, gap_new, shift):
    a = relative_progress(gap_prev, gap_new, MIN0)
    b = relative_progress(gap_prev + shift, gap_new + shift, ScoreSpec("minimize", shift))
    assert abs(a - b) <= 1e-9


@given(st.lists(st.floats(0, 1), max_size=200), st.floats(0, 0.999))
def test_momentum_stays_in_unit_interval(rs, beta):
    t = ProgressTracker(1.0, 1.0, 1.0, 1.0, beta)
    for r in rs:
        prev_step = t.step
        t = update_momentum(t, r)
        assert 0.0 <= t.momentum_m <= 1.0
        assert t.step == prev_step + 1


@given(st.integers(0, 60), st.floats(0, 0.999))
def test_barren_decay_is_power_of_beta(k, beta):
    t = ProgressTracker(1.0, 1.0, 1.0, 1.0, beta)
    expected = 1.0
    for _ in range(k):
        t = update_momentum(t, 0.0)
        expected = beta * expected
    assert t.momentum_m == expected


@given(st.lists(st.one_of(st.none(), st.floats(0, 10)), max_size=100))
def test_absolute_progress_monotone_and_ordering(scores):
    t = ProgressTracker.start(10.0)
    last_a = 0.0
    for s in scores:
        t, _ = observe(t, s, MIN0)
        assert t.s_best <= t.s_prev <= t.s0
        a = absolute_progress(t, MIN0)
        assert 0.0 <= a <= 1.0 and a >= last_a
        last_a = a
