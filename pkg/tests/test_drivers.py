import numpy as np
import pytest

from fmsim.classify import classify_episode
from fmsim.drivers import (
    ActionKind,
    DriverAction,
    DriverSpec,
    ParametricInstance,
    ScriptedAction,
    fixed,
    instantiate,
    lognormal,
    non_responder,
    parametric,
    scripted,
    scripted_from_session,
    session_log_from_trace,
    uniform,
)
from fmsim.errors import ConfigError, MalformedLogError, OrderingError
from fmsim.scenario import EventKind, ideal_swa, run_episode


def test_non_responder_never_takes_over(config):
    trace = run_episode(config, non_responder(), seed=123)
    assert trace.event_time(EventKind.TAKE_OVER) is None


def test_fixed_distributions_are_exact():
    inst = instantiate(parametric(fixed(2.27), fixed(1.0)), seed=7)
    assert inst.delay == 2.27
    assert inst.steer_scale == 1.0


def test_uniform_delay_monte_carlo_mean():
    spec = parametric(uniform(1.0, 3.0), fixed(1.0))
    delays = [instantiate(spec, s).delay for s in range(1000)]
    assert abs(np.mean(delays) - 2.0) <= 0.1


def test_lognormal_support_is_positive():
    spec = parametric(lognormal(0.6, 0.35), fixed(1.0))
    assert all(instantiate(spec, s).delay > 0 for s in range(100))


def test_instantiate_is_seed_stable():
    spec = parametric(uniform(0.5, 3.0), lognormal(0.0, 0.5))
    a = instantiate(spec, 99)
    b = instantiate(spec, 99)
    assert (a.delay, a.steer_scale) == (b.delay, b.steer_scale)
    c = instantiate(spec, 100)
    assert (a.delay, a.steer_scale) != (c.delay, c.steer_scale)


def test_takeover_fires_at_tor_plus_delay(config):
    trace = run_episode(config, parametric(fixed(2.27), fixed(1.0)), seed=1)
    to_t = trace.event_time(EventKind.TAKE_OVER)
    assert abs(to_t - 10.23) <= config.dt + 1e-9


def test_initial_steer_is_scaled_ideal():
    inst = ParametricInstance(delay=0.0, steer_scale=2.0, steer_hold=1.0)
    action = inst.act(5.0, tor_time=5.0, ideal=10.5)
    assert action.kind == ActionKind.TAKE_OVER
    action = inst.act(5.01, tor_time=5.0, ideal=9.0)
    assert action.kind == ActionKind.STEER
    assert action.swa == 21.0  # held at 2 x ideal-at-take-over


def test_identity_scale_tracks_ideal(config):
    trace = run_episode(config, parametric(fixed(0.5), fixed(1.0)), seed=2)
    to_t = trace.event_time(EventKind.TAKE_OVER)
    first_cmd = None
    for sample in trace.samples:
        if sample.driver_swa is None:
            continue
        if first_cmd is None and sample.t > to_t + 1e-9:
            # initial command equals the ideal angle at the take-over tick
            at_to = trace.sample_at(to_t)
            first_cmd = sample.driver_swa
            assert first_cmd == pytest.approx(
                ideal_swa(at_to.state, config.road, config), abs=1e-12
            )
        if sample.t > to_t + 1.0 + 1e-9:
            # tracking phase: command equals the ideal angle at that tick
            assert sample.driver_swa == pytest.approx(
                ideal_swa(sample.state, config.road, config), abs=1e-12
            )
    assert first_cmd is not None


def test_hold_phase_is_constant(config):
    trace = run_episode(config, parametric(fixed(0.1), fixed(3.0)), seed=2)
    to_t = trace.event_time(EventKind.TAKE_OVER)
    held = [
        s.driver_swa
        for s in trace.samples
        if s.driver_swa is not None and to_t + 1e-9 < s.t < to_t + 1.0 - 1e-9
    ]
    assert len(set(held)) == 1


def test_act_ordering_guard():
    inst = ParametricInstance(delay=1.0, steer_scale=1.0, steer_hold=1.0)
    inst.act(1.0, None, 0.0)
    with pytest.raises(OrderingError):
        inst.act(0.5, None, 0.0)


def test_action_swa_range_enforced():
    with pytest.raises(ConfigError):
        DriverAction(kind=ActionKind.STEER, swa=541.0)
    with pytest.raises(ConfigError):
        DriverAction(kind=ActionKind.STEER, swa=float("nan"))


def test_scripted_pre_tor_takeover_is_dropped(config):
    driver = scripted([ScriptedAction(t=5.0, kind=ActionKind.TAKE_OVER)])
    trace = run_episode(config, driver, seed=0)
    assert trace.event_time(EventKind.TAKE_OVER) is None


# --- scripted_from_session -----------------------------------------------------

def test_empty_log_is_non_responder_equivalent(config):
    spec = scripted_from_session([])
    trace = run_episode(config, spec, seed=0)
    assert trace.event_time(EventKind.TAKE_OVER) is None


def test_log_replays_takeover_time(config):
    spec = scripted_from_session([{"t": 9.12, "kind": "TAKE_OVER"}])
    trace = run_episode(config, spec, seed=0)
    record, _, _ = classify_episode(trace, config.timeline.tor_time, 1, config)
    assert record.to_t2 == pytest.approx(9.12, abs=config.dt + 1e-9)


def test_duplicate_takeover_rejected():
    with pytest.raises(MalformedLogError):
        scripted_from_session(
            [{"t": 9.0, "kind": "TAKE_OVER"}, {"t": 9.5, "kind": "TAKE_OVER"}]
        )


def test_non_increasing_log_rejected():
    with pytest.raises(MalformedLogError):
        scripted_from_session(
            [{"t": 9.0, "kind": "STEER", "swa": 1.0}, {"t": 9.0, "kind": "STEER", "swa": 2.0}]
        )


@pytest.mark.parametrize("delay,scale", [(0.1, 3.0), (0.5, 1.0), (2.27, 0.3), (6.0, 1.0)])
def test_replay_fidelity(config, delay, scale):
    # trace -> session log -> scripted replay reproduces the record exactly
    trace = run_episode(config, parametric(fixed(delay), fixed(scale)), seed=11)
    record, labels, _ = classify_episode(trace, config.timeline.tor_time, 1, config)
    replay_spec = scripted_from_session(session_log_from_trace(trace))
    replay = run_episode(config, replay_spec, seed=999)
    record2, labels2, _ = classify_episode(replay, config.timeline.tor_time, 1, config)
    assert record == record2
    assert labels == labels2


def test_spec_json_round_trip():
    specs = [
        non_responder(),
        parametric(lognormal(0.6, 0.35), uniform(0.5, 3.0), steer_hold=1.5),
        scripted(
            [
                ScriptedAction(t=9.12, kind=ActionKind.TAKE_OVER),
                ScriptedAction(t=9.2, kind=ActionKind.STEER, swa=-4.5),
            ]
        ),
    ]
    for spec in specs:
        assert DriverSpec.from_dict(spec.to_dict()) == spec


def test_invalid_parametric_spec_rejected():
    with pytest.raises(ConfigError):
        parametric(fixed(-1.0), fixed(1.0))
    with pytest.raises(ConfigError):
        parametric(fixed(1.0), fixed(0.0))
    with pytest.raises(ConfigError):
        parametric(uniform(3.0, 1.0), fixed(1.0))
