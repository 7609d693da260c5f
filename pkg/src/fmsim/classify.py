"""Test-case records, misuse labels, and the online misuse detector.

A finished episode trace is reduced to one record row (take-over and hazard
timing plus the steering response), labeled with the two misuse causes --
false recognition (delayed or absent take-over) and misjudgment (over- or
understeering relative to the ideal steering angle) -- and re-measured by a
noisy detector model so detection accuracy is a nontrivial quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import IncompleteTraceError
from .scenario import EpisodeTrace, EventKind

DELAY_THRESHOLD = 1.77  # seconds; take-over at or beyond this is delayed
SWA_WINDOW = 1.0  # seconds after take-over scanned for the steering response
STEER_REL_TOL = 0.10
STEER_ABS_FLOOR = 1.0  # degrees


class SteerClass(str, Enum):
    OK = "OK"
    OVERSTEER = "OVERSTEER"
    UNDERSTEER = "UNDERSTEER"


class Controllability(str, Enum):
    PROVIDED = "PROVIDED"
    NOT_PROVIDED = "NOT_PROVIDED"
    NOT_APPLICABLE = "NOT_APPLICABLE"


@dataclass(frozen=True)
class TestCaseRecord:
    """One row of the test-case series table.

    Zero-valued timing fields mean "not applicable" (no take-over / no
    hazard), mirroring the table layout.
    """

    tc: int
    to: int
    to_t2: float
    delta_t2: float
    del_to: int
    swa: float
    h: int
    h_t3: float
    delta_t3: float

    def to_dict(self) -> dict:
        return {
            "tc": self.tc,
            "to": self.to,
            "to_t2": self.to_t2,
            "delta_t2": self.delta_t2,
            "del_to": self.del_to,
            "swa": self.swa,
            "h": self.h,
            "h_t3": self.h_t3,
            "delta_t3": self.delta_t3,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TestCaseRecord":
        return cls(
            tc=int(data["tc"]),
            to=int(data["to"]),
            to_t2=float(data["to_t2"]),
            delta_t2=float(data["delta_t2"]),
            del_to=int(data["del_to"]),
            swa=float(data["swa"]),
            h=int(data["h"]),
            h_t3=float(data["h_t3"]),
            delta_t3=float(data["delta_t3"]),
        )


@dataclass(frozen=True)
class MisuseLabels:
    del_to: int
    steer_class: SteerClass
    mj: int
    fr: int
    fm: int
    controllability: Controllability

    def to_dict(self) -> dict:
        return {
            "del_to": self.del_to,
            "steer_class": self.steer_class.value,
            "mj": self.mj,
            "fr": self.fr,
            "fm": self.fm,
            "controllability": self.controllability.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MisuseLabels":
        return cls(
            del_to=int(data["del_to"]),
            steer_class=SteerClass(data["steer_class"]),
            mj=int(data["mj"]),
            fr=int(data["fr"]),
            fm=int(data["fm"]),
            controllability=Controllability(data["controllability"]),
        )


@dataclass(frozen=True)
class DetectorOutput:
    fm_flagged: int
    measured_delay: float
    measured_swa_dev: float

    def to_dict(self) -> dict:
        return {
            "fm_flagged": self.fm_flagged,
            "measured_delay": self.measured_delay,
            "measured_swa_dev": self.measured_swa_dev,
        }


def _require_complete(trace: EpisodeTrace):
    if not trace.complete:
        raise IncompleteTraceError("trace has no episode-end event")


def takeover_sample(trace: EpisodeTrace):
    """Sample at the take-over tick, or None when the driver never took over."""
    to_t = trace.event_time(EventKind.TAKE_OVER)
    if to_t is None:
        return None
    return trace.sample_at(to_t)


def steering_features(trace: EpisodeTrace, window: float = SWA_WINDOW):
    """(swa at take-over, initial post-take-over command, window peak |swa|).

    The initial command is the first steering value the driver applied after
    the take-over tick; the peak is the largest |command| within the window.
    Falls back to the held steering angle when the driver never steered.
    """
    to_t = trace.event_time(EventKind.TAKE_OVER)
    if to_t is None:
        return None
    swa_at_to = trace.sample_at(to_t).state.swa
    initial = None
    peak = None
    for sample in trace.samples:
        if sample.t <= to_t + 1e-9 or sample.driver_swa is None:
            continue
        if sample.t > to_t + window + 1e-9:
            break
        if initial is None:
            initial = sample.driver_swa
        peak = max(peak, abs(sample.driver_swa)) if peak is not None else abs(sample.driver_swa)
    if initial is None:
        initial = swa_at_to
    if peak is None:
        peak = abs(swa_at_to)
    return swa_at_to, initial, peak


def derive_record(trace: EpisodeTrace, tor_time: float, tc_index: int) -> TestCaseRecord:
    """Reduce a finished trace to one test-case row.

    delta_t2 is the take-over delay relative to the (fixed) take-over
    request time; delta_t3 is the signed gap between the first hazard and
    the take-over (negative when the hazard came first). The swa column is
    the magnitude of the difference between the peak steering input applied
    within the window after take-over and the steering angle at the
    take-over instant.
    """
    _require_complete(trace)
    to_t = trace.event_time(EventKind.TAKE_OVER)
    hazard = trace.first_hazard()
    h = 1 if hazard is not None else 0
    h_t3 = hazard.t if hazard is not None else 0.0
    if to_t is None:
        return TestCaseRecord(
            tc=tc_index, to=0, to_t2=0.0, delta_t2=0.0, del_to=0, swa=0.0,
            h=h, h_t3=h_t3, delta_t3=0.0,
        )
    delta_t2 = to_t - tor_time
    swa_at_to, _, peak = steering_features(trace)
    swa = abs(peak - swa_at_to)
    delta_t3 = h_t3 - to_t if h else 0.0
    return TestCaseRecord(
        tc=tc_index,
        to=1,
        to_t2=to_t,
        delta_t2=delta_t2,
        del_to=classify_takeover(delta_t2),
        swa=swa,
        h=h,
        h_t3=h_t3,
        delta_t3=delta_t3,
    )


def classify_takeover(delta_t2: float, threshold: float = DELAY_THRESHOLD) -> int:
    """1 when the take-over counts as delayed.

    In-time means strictly below the threshold; the boundary itself is
    delayed.
    """
    return 1 if delta_t2 >= threshold else 0


def steering_band(ideal: float, rel_tol: float = STEER_REL_TOL,
                  abs_floor: float = STEER_ABS_FLOOR) -> float:
    return max(rel_tol * abs(ideal), abs_floor)


def classify_steering(
    applied_swa: float,
    ideal: float,
    rel_tol: float = STEER_REL_TOL,
    abs_floor: float = STEER_ABS_FLOOR,
) -> SteerClass:
    """Over/understeer call for the driver's steering response.

    The comparison runs along the ideal steering direction: oversteer is
    steering past the ideal angle by more than the tolerance band, understeer
    falling short of it by more than the band.
    """
    if not (math.isfinite(applied_swa) and math.isfinite(ideal)):
        raise ValueError(f"non-finite steering inputs: {applied_swa}, {ideal}")
    tol = steering_band(ideal, rel_tol, abs_floor)
    direction = -1.0 if ideal < 0 else 1.0
    applied_dir = applied_swa * direction
    ideal_mag = abs(ideal)
    if applied_dir > ideal_mag + tol:
        return SteerClass.OVERSTEER
    if applied_dir < ideal_mag - tol:
        return SteerClass.UNDERSTEER
    return SteerClass.OK


def steering_deviation(applied_swa: float, ideal: float) -> float:
    """Signed deviation along the ideal steering direction (degrees);
    positive = steered past the ideal, negative = fell short."""
    direction = -1.0 if ideal < 0 else 1.0
    return applied_swa * direction - abs(ideal)


def label_misuse(
    record: TestCaseRecord, steer_class: SteerClass, to_occurred: bool
) -> MisuseLabels:
    """Ground-truth misuse labels for one episode.

    False recognition covers delayed take-over and no take-over at all;
    misjudgment is any non-OK steering class. Controllability is judged only
    for take-over episodes.
    """
    mj = 1 if steer_class != SteerClass.OK else 0
    fr = 1 if (record.del_to == 1 or not to_occurred) else 0
    fm = 1 if (mj or fr) else 0
    if not to_occurred:
        controllability = Controllability.NOT_APPLICABLE
    elif record.h == 1:
        controllability = Controllability.NOT_PROVIDED
    else:
        controllability = Controllability.PROVIDED
    return MisuseLabels(
        del_to=record.del_to,
        steer_class=steer_class,
        mj=mj,
        fr=fr,
        fm=fm,
        controllability=controllability,
    )


def classify_episode(trace: EpisodeTrace, tor_time: float, tc_index: int,
                     config=None) -> tuple[TestCaseRecord, MisuseLabels, float]:
    """Record + labels + ideal-SWA-at-take-over for one finished trace.

    The steering class compares the driver's initial post-take-over command
    against the ideal angle at the take-over instant.
    """
    from .scenario import ideal_swa

    record = derive_record(trace, tor_time, tc_index)
    ideal_at_to = 0.0
    steer_class = SteerClass.OK
    if record.to == 1 and config is not None:
        sample = takeover_sample(trace)
        ideal_at_to = ideal_swa(sample.state, config.road, config)
        _, initial, _ = steering_features(trace)
        steer_class = classify_steering(initial, ideal_at_to)
    labels = label_misuse(record, steer_class, to_occurred=record.to == 1)
    return record, labels, ideal_at_to


def detect_fm_online(
    trace: EpisodeTrace,
    ideal_at_to: float,
    noise_seed: int,
    sigma_t: float = 0.05,
    sigma_swa: float = 0.5,
) -> DetectorOutput:
    """Model of the system's own misuse detector.

    Re-measures the take-over delay and the steering deviation with additive
    Gaussian noise and applies the same thresholds as the ground-truth
    labeling, so the noiseless detector reproduces the labels exactly. An
    episode without take-over is always flagged and reports the episode
    length as its delay.
    """
    _require_complete(trace)
    rng = np.random.Generator(np.random.Philox(key=noise_seed))
    noise_t = float(rng.normal(0.0, sigma_t)) if sigma_t > 0 else 0.0
    noise_swa = float(rng.normal(0.0, sigma_swa)) if sigma_swa > 0 else 0.0

    to_t = trace.event_time(EventKind.TAKE_OVER)
    if to_t is None:
        return DetectorOutput(
            fm_flagged=1, measured_delay=trace.duration, measured_swa_dev=0.0
        )
    tor_t = trace.event_time(EventKind.TOR)
    true_delay = to_t - tor_t if tor_t is not None else 0.0
    _, initial, _ = steering_features(trace)
    true_dev = steering_deviation(initial, ideal_at_to)

    measured_delay = true_delay + noise_t
    measured_dev = true_dev + noise_swa
    tol = steering_band(ideal_at_to)
    flagged = 1 if (measured_delay >= DELAY_THRESHOLD or abs(measured_dev) > tol) else 0
    return DetectorOutput(
        fm_flagged=flagged, measured_delay=measured_delay, measured_swa_dev=measured_dev
    )
