import random

import pytest

from fmsim.classify import (
    DetectorOutput,
    MisuseLabels,
    SteerClass,
    TestCaseRecord,
    label_misuse,
)
from fmsim.scenario import (
    AdsMode,
    EpisodeTrace,
    EventKind,
    TraceEvent,
    TraceSample,
    VehicleState,
    default_config,
)

TOR_TIME = 7.96


@pytest.fixture(scope="session")
def config():
    return default_config()


def synthetic_trace(
    to_t2=None,
    hazard_t=None,
    hazard_kind=EventKind.HAZARD_WEST,
    swa_at_to=0.0,
    driver_cmds=(),
    tor_time=TOR_TIME,
    warning_time=6.04,
    end_t=14.0,
    dt=0.01,
):
    """Hand-built trace with events at exact times; driver_cmds is a list of
    (t, swa) commands applied from their time onward."""
    events = [
        TraceEvent(warning_time, EventKind.GAP_ENTRY),
        TraceEvent(warning_time, EventKind.WARNING),
        TraceEvent(tor_time, EventKind.TOR),
    ]
    if to_t2 is not None:
        events.append(TraceEvent(to_t2, EventKind.TAKE_OVER))
    if hazard_t is not None:
        events.append(TraceEvent(hazard_t, hazard_kind))
    events.sort(key=lambda e: e.t)
    events.append(TraceEvent(end_t, EventKind.EPISODE_END))

    cmds = sorted(driver_cmds)
    samples = []
    n = round(end_t / dt)
    for k in range(n + 1):
        t = k * dt
        driver_swa = None
        mode = AdsMode.AUTOMATED
        if to_t2 is not None and t >= to_t2 - 1e-9:
            mode = AdsMode.DRIVER_CONTROL
            driver_swa = swa_at_to
            for ct, cv in cmds:
                if ct <= t + 1e-9:
                    driver_swa = cv
        state = VehicleState(s=27.78 * t, y=3.5, heading=0.0, speed=27.78,
                             swa=driver_swa if driver_swa is not None else swa_at_to)
        samples.append(TraceSample(t=t, state=state, mode=mode, driver_swa=driver_swa))
    return EpisodeTrace(samples=samples, events=events)


def make_record(tc, to=1, delta_t2=0.0, h=0, delta_t3=0.0, swa=0.0, tor_time=TOR_TIME):
    if to == 0:
        return TestCaseRecord(tc=tc, to=0, to_t2=0.0, delta_t2=0.0, del_to=0,
                              swa=0.0, h=h, h_t3=tor_time + 3.0 if h else 0.0,
                              delta_t3=0.0)
    to_t2 = tor_time + delta_t2
    return TestCaseRecord(
        tc=tc,
        to=1,
        to_t2=to_t2,
        delta_t2=delta_t2,
        del_to=1 if delta_t2 >= 1.77 else 0,
        swa=swa,
        h=h,
        h_t3=to_t2 + delta_t3 if h else 0.0,
        delta_t3=delta_t3 if h else 0.0,
    )


def make_labeled(tc, to=1, delta_t2=0.0, h=0, steer=SteerClass.OK, delta_t3=0.5):
    record = make_record(tc, to=to, delta_t2=delta_t2, h=h, delta_t3=delta_t3)
    labels = label_misuse(record, steer if to else SteerClass.OK, to_occurred=to == 1)
    return labels, record


def random_campaign(rng: random.Random, n: int):
    """Random but invariant-consistent campaign of (labels, detector, record)."""
    rows = []
    for i in range(n):
        to = rng.random() < 0.8
        if to:
            delta = round(rng.uniform(0.0, 4.0), 4)
            steer = rng.choice([SteerClass.OK, SteerClass.OVERSTEER, SteerClass.UNDERSTEER])
        else:
            delta = 0.0
            steer = SteerClass.OK
        h = rng.random() < 0.4
        labels, record = make_labeled(
            i + 1,
            to=1 if to else 0,
            delta_t2=delta,
            h=1 if h else 0,
            steer=steer,
            delta_t3=round(rng.uniform(-0.5, 1.5), 4),
        )
        detector = DetectorOutput(
            fm_flagged=1 if rng.random() < 0.5 else 0,
            measured_delay=delta,
            measured_swa_dev=0.0,
        )
        rows.append((labels, detector, record))
    return rows
