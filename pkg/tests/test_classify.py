from statistics import NormalDist

import pytest
from hypothesis import given, settings, strategies as st

from conftest import synthetic_trace
from fmsim.classify import (
    Controllability,
    SteerClass,
    classify_episode,
    classify_steering,
    classify_takeover,
    derive_record,
    detect_fm_online,
    label_misuse,
    steering_band,
)
from fmsim.drivers import fixed, non_responder, parametric
from fmsim.errors import IncompleteTraceError
from fmsim.scenario import EventKind, run_episode

TOR = 7.96


# --- derive_record ---------------------------------------------------------

def test_derive_record_takeover_no_hazard():
    trace = synthetic_trace(to_t2=10.23)
    record = derive_record(trace, TOR, 1)
    assert record.to == 1
    assert record.to_t2 == pytest.approx(10.23, abs=1e-9)
    assert record.delta_t2 == pytest.approx(2.27, abs=1e-9)
    assert record.del_to == 1
    assert record.h == 0
    assert record.h_t3 == 0.0
    assert record.delta_t3 == 0.0


def test_derive_record_takeover_with_hazard():
    trace = synthetic_trace(to_t2=9.12, hazard_t=10.40)
    record = derive_record(trace, TOR, 4)
    assert record.delta_t2 == pytest.approx(1.16, abs=1e-9)
    assert record.del_to == 0
    assert record.h == 1
    assert record.delta_t3 == pytest.approx(1.28, abs=1e-9)


def test_derive_record_non_responder(config):
    trace = run_episode(config, non_responder(), seed=0)
    record = derive_record(trace, TOR, 2)
    assert (record.to, record.to_t2, record.delta_t2, record.del_to) == (0, 0.0, 0.0, 0)
    assert (record.swa, record.h, record.h_t3, record.delta_t3) == (0.0, 0, 0.0, 0.0)


def test_derive_record_swa_window():
    # peak |command| within 1 s after take-over, minus steering at take-over
    trace = synthetic_trace(
        to_t2=10.0,
        swa_at_to=2.0,
        driver_cmds=[(10.1, 12.0), (10.5, -20.0), (11.5, 500.0)],  # last outside window
    )
    record = derive_record(trace, TOR, 1)
    assert record.swa == pytest.approx(18.0, abs=1e-9)  # |20 - 2|


def test_derive_record_incomplete_trace(config):
    trace = run_episode(config, non_responder(), seed=0)
    trace.events = [e for e in trace.events if e.kind != EventKind.EPISODE_END]
    with pytest.raises(IncompleteTraceError):
        derive_record(trace, TOR, 1)


def test_record_arithmetic_invariant(config):
    for delay, scale, seed in [(0.1, 10.0, 1), (2.27, 1.0, 2), (1.0, 30.0, 3)]:
        trace = run_episode(config, parametric(fixed(delay), fixed(scale)), seed=seed)
        record = derive_record(trace, config.timeline.tor_time, 1)
        if record.to:
            assert abs(record.delta_t2 - (record.to_t2 - config.timeline.tor_time)) < 1e-6
        if record.h and record.to:
            assert abs(record.delta_t3 - (record.h_t3 - record.to_t2)) < 1e-6


# --- classify_takeover -------------------------------------------------------

@pytest.mark.parametrize(
    "delta,expected", [(2.27, 1), (1.16, 0), (1.77, 1), (0.0, 0), (1.7699, 0)]
)
def test_classify_takeover(delta, expected):
    assert classify_takeover(delta) == expected


# --- classify_steering -------------------------------------------------------

def test_steering_identity_is_ok():
    assert classify_steering(10.0, 10.0) == SteerClass.OK


def test_steering_oversteer_example():
    assert classify_steering(32.17, 10.0) == SteerClass.OVERSTEER


def test_steering_understeer_example():
    assert classify_steering(3.21, 10.0) == SteerClass.UNDERSTEER


def test_steering_negative_ideal_direction():
    # comparisons run along the ideal steering direction
    assert classify_steering(-32.0, -10.0) == SteerClass.OVERSTEER
    assert classify_steering(-3.0, -10.0) == SteerClass.UNDERSTEER
    assert classify_steering(-10.0, -10.0) == SteerClass.OK


def test_steering_band_floor():
    assert steering_band(0.5) == 1.0
    assert steering_band(50.0) == 5.0
    # within the absolute floor everything is OK
    assert classify_steering(0.9, 0.0) == SteerClass.OK


@given(
    ideal=st.floats(min_value=0.0, max_value=80.0),
    lo=st.floats(min_value=-500.0, max_value=500.0),
    hi=st.floats(min_value=-500.0, max_value=500.0),
)
@settings(max_examples=200, deadline=None)
def test_steering_monotone_in_applied(ideal, lo, hi):
    # larger applied angle never moves the class toward understeer
    order = {SteerClass.UNDERSTEER: 0, SteerClass.OK: 1, SteerClass.OVERSTEER: 2}
    a, b = min(lo, hi), max(lo, hi)
    assert order[classify_steering(a, ideal)] <= order[classify_steering(b, ideal)]


# --- label_misuse ------------------------------------------------------------

def test_labels_delayed_ok_no_hazard():
    from conftest import make_record

    record = make_record(1, delta_t2=2.27, h=0)
    labels = label_misuse(record, SteerClass.OK, to_occurred=True)
    assert (labels.fr, labels.mj, labels.fm) == (1, 0, 1)
    assert labels.controllability == Controllability.PROVIDED


def test_labels_timely_oversteer_hazard():
    from conftest import make_record

    record = make_record(2, delta_t2=1.16, h=1, delta_t3=1.28)
    labels = label_misuse(record, SteerClass.OVERSTEER, to_occurred=True)
    assert (labels.mj, labels.fr, labels.fm) == (1, 0, 1)
    assert labels.controllability == Controllability.NOT_PROVIDED


def test_labels_no_takeover():
    from conftest import make_record

    record = make_record(3, to=0)
    labels = label_misuse(record, SteerClass.OK, to_occurred=False)
    assert labels.fr == 1
    assert labels.fm == 1
    assert labels.controllability == Controllability.NOT_APPLICABLE


def test_label_soundness_over_episodes(config):
    cases = [(0.1, 0.3), (0.1, 1.0), (0.1, 3.0), (2.27, 1.0), (1.77, 30.0)]
    for seed, (delay, scale) in enumerate(cases):
        trace = run_episode(config, parametric(fixed(delay), fixed(scale)), seed=seed)
        record, labels, _ = classify_episode(trace, config.timeline.tor_time, 1, config)
        assert labels.fm == (
            1 if (record.del_to or labels.steer_class != SteerClass.OK or record.to == 0) else 0
        )


# --- detect_fm_online ----------------------------------------------------------

def test_noiseless_detector_equals_ground_truth(config):
    cases = [(0.1, 0.3), (0.1, 1.0), (0.1, 3.0), (2.27, 1.0), (1.0, 10.0), (3.0, 1.0)]
    for seed, (delay, scale) in enumerate(cases):
        trace = run_episode(config, parametric(fixed(delay), fixed(scale)), seed=seed)
        record, labels, ideal_at_to = classify_episode(
            trace, config.timeline.tor_time, 1, config
        )
        out = detect_fm_online(trace, ideal_at_to, noise_seed=seed, sigma_t=0.0, sigma_swa=0.0)
        assert out.fm_flagged == labels.fm


def test_detector_flag_rate_matches_normal_cdf(config):
    # true delay 1.70 with sigma_t=0.05: flag probability is Phi(-1.4)
    trace = run_episode(config, parametric(fixed(1.70), fixed(1.0)), seed=3)
    _, _, ideal_at_to = classify_episode(trace, config.timeline.tor_time, 1, config)
    flags = sum(
        detect_fm_online(trace, ideal_at_to, noise_seed=s, sigma_t=0.05, sigma_swa=0.0).fm_flagged
        for s in range(10000)
    )
    expected = NormalDist().cdf(-1.4)
    assert abs(flags / 10000 - expected) <= 0.01


def test_detector_flags_non_responder(config):
    trace = run_episode(config, non_responder(), seed=0)
    out = detect_fm_online(trace, 0.0, noise_seed=1)
    assert out.fm_flagged == 1
    assert out.measured_delay == trace.duration


def test_detector_deterministic_per_seed(config):
    trace = run_episode(config, parametric(fixed(1.70), fixed(1.0)), seed=3)
    _, _, ideal_at_to = classify_episode(trace, config.timeline.tor_time, 1, config)
    a = detect_fm_online(trace, ideal_at_to, noise_seed=77)
    b = detect_fm_online(trace, ideal_at_to, noise_seed=77)
    assert a == b
