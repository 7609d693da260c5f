"""Take-over scenario simulation.

Models a two-lane one-way highway on which an ego vehicle under automated
control performs a right-to-left lane change, crosses a stretch of road with
missing lane markings, warns the driver, issues a take-over request, and
falls back to a minimal risk maneuver when the driver does not respond.

Conventions: the lateral axis y is zero at the right-lane center and
positive toward the left (west) road edge; steering-wheel angle (SWA) is in
degrees, positive steering leftward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Protocol

from .errors import ConfigError, EpisodeInvalidError

DEFAULT_LANE_WIDTH = 3.5
DEFAULT_SPEED = 27.78  # 100 km/h
DEFAULT_VEHICLE_WIDTH = 1.8
LANE_CHANGE_DURATION = 4.0  # fixed maneuver window, seconds
_EPS = 1e-9


class AdsMode(str, Enum):
    AUTOMATED = "AUTOMATED"
    WARNING_ISSUED = "WARNING_ISSUED"
    TOR_ISSUED = "TOR_ISSUED"
    DRIVER_CONTROL = "DRIVER_CONTROL"
    REDUCED_FUNCTIONALITY_MRM = "REDUCED_FUNCTIONALITY_MRM"
    STOPPED = "STOPPED"


# Legal mode-machine edges; anything else is a bug in the runner.
LEGAL_TRANSITIONS: dict[AdsMode, frozenset[AdsMode]] = {
    AdsMode.AUTOMATED: frozenset({AdsMode.WARNING_ISSUED}),
    AdsMode.WARNING_ISSUED: frozenset({AdsMode.TOR_ISSUED}),
    AdsMode.TOR_ISSUED: frozenset(
        {AdsMode.DRIVER_CONTROL, AdsMode.REDUCED_FUNCTIONALITY_MRM}
    ),
    AdsMode.REDUCED_FUNCTIONALITY_MRM: frozenset(
        {AdsMode.DRIVER_CONTROL, AdsMode.STOPPED}
    ),
    AdsMode.DRIVER_CONTROL: frozenset(),
    AdsMode.STOPPED: frozenset(),
}

# Modes in which the automation commands steering/acceleration.
ADS_CONTROLLING_MODES = frozenset(
    {
        AdsMode.AUTOMATED,
        AdsMode.WARNING_ISSUED,
        AdsMode.TOR_ISSUED,
        AdsMode.REDUCED_FUNCTIONALITY_MRM,
    }
)


class EventKind(str, Enum):
    GAP_ENTRY = "GAP_ENTRY"
    WARNING = "WARNING"
    TOR = "TOR"
    TAKE_OVER = "TAKE_OVER"
    HAZARD_EAST = "HAZARD_EAST"
    HAZARD_WEST = "HAZARD_WEST"
    MRM_START = "MRM_START"
    MRM_STOPPED = "MRM_STOPPED"
    EPISODE_END = "EPISODE_END"


HAZARD_KINDS = frozenset({EventKind.HAZARD_EAST, EventKind.HAZARD_WEST})


@dataclass(frozen=True)
class RoadSpec:
    """Straight two-lane one-way road with a missing-marking zone.

    Right-lane center is y = 0, left-lane center is y = lane_width. The west
    (left) edge sits at 1.5 * lane_width and the east (right) edge at
    -lane_width / 2; both are derived from lane_width.
    """

    lane_width: float = DEFAULT_LANE_WIDTH
    lane_count: int = 2
    marking_gap_start: float = DEFAULT_SPEED * 6.04
    marking_gap_end: float = DEFAULT_SPEED * 6.04 + 300.0
    west_edge_y: float = field(init=False)
    east_edge_y: float = field(init=False)

    def __post_init__(self):
        errors = []
        if self.lane_count != 2:
            errors.append(f"lane_count must be 2, got {self.lane_count}")
        if not self.lane_width > 0:
            errors.append(f"lane_width must be positive, got {self.lane_width}")
        if not self.marking_gap_start < self.marking_gap_end:
            errors.append(
                "marking_gap_start must precede marking_gap_end "
                f"({self.marking_gap_start} >= {self.marking_gap_end})"
            )
        if errors:
            raise ConfigError("invalid road", errors)
        object.__setattr__(self, "west_edge_y", 1.5 * self.lane_width)
        object.__setattr__(self, "east_edge_y", -0.5 * self.lane_width)

    @property
    def left_lane_center(self) -> float:
        return self.lane_width


@dataclass(frozen=True)
class VehicleState:
    """Ego pose and steering at one instant.

    swa is the currently applied steering-wheel angle in degrees.
    """

    s: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    speed: float = DEFAULT_SPEED
    swa: float = 0.0

    def __post_init__(self):
        vals = (self.s, self.y, self.heading, self.speed, self.swa)
        if not all(math.isfinite(v) for v in vals):
            raise EpisodeInvalidError(f"non-finite vehicle state: {vals}")
        if self.speed < 0:
            raise EpisodeInvalidError(f"negative speed: {self.speed}")
        if abs(self.heading) >= math.pi / 2:
            raise EpisodeInvalidError(
                f"heading {self.heading:.4f} rad outside valid envelope (|h| < pi/2)"
            )


@dataclass(frozen=True)
class ScenarioTimeline:
    warning_time: float = 6.04
    tor_time: float = 7.96
    lane_change_start: float = 4.0
    episode_max_duration: float = 30.0

    def __post_init__(self):
        ordered = (
            0.0
            < self.lane_change_start
            < self.warning_time
            < self.tor_time
            < self.episode_max_duration
        )
        if not ordered:
            raise ConfigError(
                "timeline must satisfy 0 < lane_change_start < warning_time "
                f"< tor_time < episode_max_duration, got lane_change_start="
                f"{self.lane_change_start}, warning_time={self.warning_time}, "
                f"tor_time={self.tor_time}, episode_max_duration="
                f"{self.episode_max_duration}"
            )


@dataclass(frozen=True)
class SimConfig:
    road: RoadSpec = field(default_factory=RoadSpec)
    timeline: ScenarioTimeline = field(default_factory=ScenarioTimeline)
    initial_state: VehicleState = field(default_factory=VehicleState)
    dt: float = 0.01
    wheelbase: float = 2.7
    steering_ratio: float = 15.0
    mrm_grace: float = 5.0
    mrm_decel: float = 2.0
    vehicle_width: float = DEFAULT_VEHICLE_WIDTH
    kp: float = 0.1
    kd: float = 0.05
    kh: float = 1.0

    def __post_init__(self):
        errors = []
        for name in ("dt", "wheelbase", "steering_ratio", "mrm_grace", "mrm_decel",
                     "vehicle_width"):
            if not getattr(self, name) > 0:
                errors.append(f"{name} must be positive, got {getattr(self, name)}")
        if errors:
            raise ConfigError("invalid sim config", errors)


def default_config(**overrides) -> SimConfig:
    """SimConfig with the marking gap placed so the vehicle enters it at
    warning_time when driving straight at the initial speed."""
    timeline = overrides.pop("timeline", ScenarioTimeline())
    initial = overrides.pop("initial_state", VehicleState())
    if "road" not in overrides:
        gap_start = initial.s + initial.speed * timeline.warning_time
        overrides["road"] = RoadSpec(
            marking_gap_start=gap_start, marking_gap_end=gap_start + 300.0
        )
    return SimConfig(timeline=timeline, initial_state=initial, **overrides)


@dataclass(frozen=True)
class TraceSample:
    t: float
    state: VehicleState
    mode: AdsMode
    driver_swa: float | None  # command applied this tick while driver controls


@dataclass(frozen=True)
class TraceEvent:
    t: float
    kind: EventKind


@dataclass
class EpisodeTrace:
    samples: list[TraceSample] = field(default_factory=list)
    events: list[TraceEvent] = field(default_factory=list)

    def event_time(self, kind: EventKind) -> float | None:
        for ev in self.events:
            if ev.kind == kind:
                return ev.t
        return None

    def first_hazard(self) -> TraceEvent | None:
        for ev in self.events:
            if ev.kind in HAZARD_KINDS:
                return ev
        return None

    @property
    def complete(self) -> bool:
        return bool(self.events) and self.events[-1].kind == EventKind.EPISODE_END

    @property
    def duration(self) -> float:
        return self.samples[-1].t if self.samples else 0.0

    def sample_at(self, t: float) -> TraceSample:
        for s in self.samples:
            if abs(s.t - t) <= _EPS:
                return s
        raise KeyError(f"no sample at t={t}")


class DriverProtocol(Protocol):
    """Anything that can stand in for the human during an episode."""

    def act(self, t: float, tor_time: float | None, ideal: float):
        ...


def step(
    state: VehicleState,
    swa_command: float,
    accel_command: float,
    dt: float,
    config: SimConfig,
) -> VehicleState:
    """Advance the vehicle one fixed timestep.

    Kinematic bicycle with the steering-wheel angle mapped to the road-wheel
    angle through the steering ratio. The pose is advanced along the exact
    constant-curvature arc for the step's (held) inputs rather than by a
    first-order Euler update, so refining the timestep leaves piecewise-
    constant-input trajectories unchanged. Speed integrates the commanded
    acceleration and is clamped at zero.
    """
    if dt <= 0:
        raise ConfigError(f"dt must be positive, got {dt}")
    if not (math.isfinite(swa_command) and math.isfinite(accel_command)):
        raise EpisodeInvalidError(
            f"non-finite command: swa={swa_command}, accel={accel_command}"
        )
    delta = math.radians(swa_command / config.steering_ratio)
    # Midpoint speed keeps the pose update second-order accurate while braking.
    v_eff = max(0.0, state.speed + 0.5 * accel_command * dt)
    omega = v_eff / config.wheelbase * math.tan(delta)
    heading_new = state.heading + omega * dt
    if abs(heading_new) >= math.pi / 2:
        raise EpisodeInvalidError(
            f"heading {heading_new:.4f} rad leaves valid envelope (|h| < pi/2)"
        )
    if abs(omega) < 1e-12:
        y_new = state.y + v_eff * math.sin(state.heading) * dt
        s_new = state.s + v_eff * math.cos(state.heading) * dt
    else:
        y_new = state.y + (v_eff / omega) * (
            math.cos(state.heading) - math.cos(heading_new)
        )
        s_new = state.s + (v_eff / omega) * (
            math.sin(heading_new) - math.sin(state.heading)
        )
    speed_new = max(0.0, state.speed + accel_command * dt)
    return VehicleState(
        s=s_new, y=y_new, heading=heading_new, speed=speed_new, swa=swa_command
    )


def ads_controller(
    state: VehicleState,
    road: RoadSpec,
    target_lane_center: float,
    config: SimConfig,
    mode: AdsMode = AdsMode.AUTOMATED,
) -> tuple[float, float]:
    """Lane-centering steering command and longitudinal command.

    Returns (swa_command in degrees clamped to +/-90, accel_command in
    m/s^2). Acceleration is zero in nominal modes (constant-speed scenario)
    and the configured deceleration during the minimal risk maneuver.
    """
    u = (
        -config.kp * (state.y - target_lane_center)
        - config.kd * state.speed * math.sin(state.heading)
        - config.kh * state.heading
    )
    swa = config.steering_ratio * math.degrees(u)
    swa = max(-90.0, min(90.0, swa))
    accel = -config.mrm_decel if mode == AdsMode.REDUCED_FUNCTIONALITY_MRM else 0.0
    return swa, accel


def lane_change_target(
    t: float, timeline: ScenarioTimeline, road: RoadSpec
) -> float:
    """Target lateral center for the right-to-left lane change.

    Quintic blend (zero velocity and acceleration at both ends) from the
    right-lane center to the left-lane center over a fixed 4 s window;
    monotone non-decreasing in t.
    """
    if t < timeline.lane_change_start:
        return 0.0
    tau = (t - timeline.lane_change_start) / LANE_CHANGE_DURATION
    if tau >= 1.0:
        return road.left_lane_center
    blend = tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau))
    return road.left_lane_center * blend


def ideal_swa(state: VehicleState, road: RoadSpec, config: SimConfig) -> float:
    """Steering-wheel angle the lane-centering law would command to center
    the vehicle in the left lane at this instant."""
    swa, _ = ads_controller(state, road, road.left_lane_center, config)
    return swa


class Hazard(str, Enum):
    NONE = "NONE"
    HAZARD_WEST = "HAZARD_WEST"
    HAZARD_EAST = "HAZARD_EAST"


def detect_hazard(
    state: VehicleState, road: RoadSpec, vehicle_width: float = DEFAULT_VEHICLE_WIDTH
) -> Hazard:
    """Lane-departure check for a vehicle occupying the left lane.

    West departure: the vehicle's west edge crosses the road's west edge.
    East departure: the vehicle's east edge crosses back over the left
    lane's east boundary (at lane_width / 2).
    """
    half = vehicle_width / 2.0
    if state.y + half > road.west_edge_y:
        return Hazard.HAZARD_WEST
    if state.y - half < road.lane_width / 2.0:
        return Hazard.HAZARD_EAST
    return Hazard.NONE


class EpisodeRunner:
    """Single-episode fixed-timestep loop.

    Drives the mode machine, the lane-change profile, the driver model hooks
    and hazard detection one tick at a time so batch execution and the live
    session server share the same code path. Strictly single-threaded and
    deterministic.
    """

    def __init__(self, config: SimConfig, driver: DriverProtocol):
        self.config = config
        self.driver = driver
        self.trace = EpisodeTrace()
        self.state = config.initial_state
        self.mode = AdsMode.AUTOMATED
        self.t = 0.0
        self.finished = False
        self._k = 0
        self._n_ticks = round(config.timeline.episode_max_duration / config.dt)
        self._tor_t: float | None = None
        self._taken_over = False
        self._hazard_seen = False
        self._hazard_armed = False
        self._mrm_target: float | None = None
        self._driver_cmd: float | None = None  # last applied driver steering

    def _emit(self, kind: EventKind, events: list[TraceEvent]):
        ev = TraceEvent(self.t, kind)
        self.trace.events.append(ev)
        events.append(ev)

    def _transition(self, new_mode: AdsMode):
        if new_mode not in LEGAL_TRANSITIONS[self.mode]:
            raise EpisodeInvalidError(
                f"illegal mode transition {self.mode.value} -> {new_mode.value}"
            )
        self.mode = new_mode

    @property
    def target_lane(self) -> float:
        if self._mrm_target is not None:
            return self._mrm_target
        return lane_change_target(self.t, self.config.timeline, self.config.road)

    def advance(self) -> list[TraceEvent]:
        """Process one tick; returns the events emitted at this tick."""
        if self.finished:
            return []
        cfg = self.config
        tl = cfg.timeline
        self.t = self._k * cfg.dt
        t = self.t
        events: list[TraceEvent] = []

        # Mode machine. The warning is emergent: it fires when the vehicle
        # enters the missing-marking zone, which the default road places at
        # the distance covered by warning_time. The TOR is a timed event but
        # waits for the warning so the machine stays legal.
        if self.mode == AdsMode.AUTOMATED and self.state.s >= cfg.road.marking_gap_start - _EPS:
            self._emit(EventKind.GAP_ENTRY, events)
            self._emit(EventKind.WARNING, events)
            self._transition(AdsMode.WARNING_ISSUED)
        if self.mode == AdsMode.WARNING_ISSUED and t >= tl.tor_time - _EPS:
            self._emit(EventKind.TOR, events)
            self._transition(AdsMode.TOR_ISSUED)
            self._tor_t = t
        if (
            self.mode == AdsMode.TOR_ISSUED
            and t >= self._tor_t + cfg.mrm_grace - _EPS
        ):
            self._emit(EventKind.MRM_START, events)
            self._transition(AdsMode.REDUCED_FUNCTIONALITY_MRM)
            self._mrm_target = lane_change_target(t, tl, cfg.road)

        if self.mode == AdsMode.REDUCED_FUNCTIONALITY_MRM and self.state.speed <= 0.0:
            self._emit(EventKind.MRM_STOPPED, events)
            self._transition(AdsMode.STOPPED)

        # Driver hook. Take-over requests are honored only once a TOR is
        # pending (or during the MRM); anything earlier is dropped.
        ideal = ideal_swa(self.state, cfg.road, cfg)
        action = self.driver.act(t, self._tor_t, ideal)
        if action.kind.value == "TAKE_OVER" and not self._taken_over:
            if self.mode in (AdsMode.TOR_ISSUED, AdsMode.REDUCED_FUNCTIONALITY_MRM):
                self._emit(EventKind.TAKE_OVER, events)
                self._transition(AdsMode.DRIVER_CONTROL)
                self._taken_over = True
                self._driver_cmd = self.state.swa  # hold until the driver steers
        elif action.kind.value == "STEER" and self.mode == AdsMode.DRIVER_CONTROL:
            self._driver_cmd = action.swa

        # Commands for this tick.
        driver_swa_sample: float | None = None
        if self.mode == AdsMode.DRIVER_CONTROL:
            swa_cmd = self._driver_cmd if self._driver_cmd is not None else self.state.swa
            accel_cmd = 0.0
            driver_swa_sample = swa_cmd
        elif self.mode == AdsMode.STOPPED:
            swa_cmd, accel_cmd = self.state.swa, 0.0
        else:
            swa_cmd, accel_cmd = ads_controller(
                self.state, cfg.road, self.target_lane, cfg, self.mode
            )

        self.trace.samples.append(TraceSample(t, self.state, self.mode, driver_swa_sample))

        # Hazard detection arms once the vehicle has actually entered the
        # left lane; applying the left-lane departure test straight from the
        # lane-change start would flag the right lane itself as an east
        # departure.
        if t >= tl.lane_change_start - _EPS and not self._hazard_armed:
            half = cfg.vehicle_width / 2.0
            inside = (
                self.state.y - half >= cfg.road.lane_width / 2.0
                and self.state.y + half <= cfg.road.west_edge_y
            )
            if inside:
                self._hazard_armed = True
        if self._hazard_armed and not self._hazard_seen:
            hazard = detect_hazard(self.state, cfg.road, cfg.vehicle_width)
            if hazard != Hazard.NONE:
                self._emit(EventKind[hazard.value], events)
                self._hazard_seen = True

        if self.mode == AdsMode.STOPPED or self._k >= self._n_ticks:
            self._emit(EventKind.EPISODE_END, events)
            self.finished = True
            return events

        self.state = step(self.state, swa_cmd, accel_cmd, cfg.dt, cfg)
        self._k += 1
        return events

    def run(self) -> EpisodeTrace:
        while not self.finished:
            self.advance()
        return self.trace


def run_episode(config: SimConfig, driver, seed: int | None = None) -> EpisodeTrace:
    """Run one episode to completion.

    ``driver`` may be a DriverSpec (instantiated with ``seed``) or an
    already-built driver instance. Identical (config, driver, seed) inputs
    produce bit-identical traces.
    """
    from .drivers import DriverSpec, instantiate

    if isinstance(driver, DriverSpec):
        if seed is None:
            raise ConfigError("a seed is required to instantiate a DriverSpec")
        driver = instantiate(driver, seed)
    return EpisodeRunner(config, driver).run()


def with_timeline(config: SimConfig, **timeline_overrides) -> SimConfig:
    """Copy of config with timeline fields replaced."""
    return replace(config, timeline=replace(config.timeline, **timeline_overrides))
