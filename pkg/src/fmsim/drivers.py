"""Driver behavior models used in place of a human subject.

Three variants: a non-responder that never takes over, a parametric model
that samples a take-over delay and a steering misjudgment factor from
configured distributions, and a scripted replay of an explicit action list
(typically a recorded interactive session).

The parametric model's post-take-over steering has two phases: the initial
steering response (misjudgment factor times the ideal steering-wheel angle
at the take-over instant) is held for ``steer_hold`` seconds, then the
driver tracks the ideal angle. The held phase is what makes over- and
understeering observable as a lateral excursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, MalformedLogError, OrderingError

MAX_SWA = 540.0  # hardware-realistic steering range, degrees
_EPS = 1e-9


class DriverVariant(str, Enum):
    NON_RESPONDER = "NON_RESPONDER"
    PARAMETRIC = "PARAMETRIC"
    SCRIPTED = "SCRIPTED"


class ActionKind(str, Enum):
    NONE = "NONE"
    TAKE_OVER = "TAKE_OVER"
    STEER = "STEER"


@dataclass(frozen=True)
class DriverAction:
    kind: ActionKind = ActionKind.NONE
    swa: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.swa):
            raise ConfigError(f"non-finite steering angle: {self.swa}")
        if abs(self.swa) > MAX_SWA:
            raise ConfigError(f"|swa| must be <= {MAX_SWA}, got {self.swa}")


NONE_ACTION = DriverAction()


@dataclass(frozen=True)
class Distribution:
    """Scalar sampling distribution: fixed value, uniform(a, b), or
    lognormal(mu, sigma)."""

    family: str = "fixed"
    value: float = 0.0
    a: float = 0.0
    b: float = 0.0
    mu: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.family not in ("fixed", "uniform", "lognormal"):
            raise ConfigError(f"unknown distribution family: {self.family!r}")
        if self.family == "uniform" and not self.a <= self.b:
            raise ConfigError(f"uniform bounds must satisfy a <= b, got ({self.a}, {self.b})")
        if self.family == "lognormal" and self.sigma < 0:
            raise ConfigError(f"lognormal sigma must be >= 0, got {self.sigma}")

    def sample(self, rng: np.random.Generator) -> float:
        if self.family == "fixed":
            return float(self.value)
        if self.family == "uniform":
            return float(rng.uniform(self.a, self.b))
        return float(rng.lognormal(self.mu, self.sigma))

    def support_min(self) -> float:
        if self.family == "fixed":
            return self.value
        if self.family == "uniform":
            return self.a
        return 0.0

    def to_dict(self) -> dict:
        if self.family == "fixed":
            return {"family": "fixed", "value": self.value}
        if self.family == "uniform":
            return {"family": "uniform", "a": self.a, "b": self.b}
        return {"family": "lognormal", "mu": self.mu, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, data: dict) -> "Distribution":
        return cls(**data)


def fixed(value: float) -> Distribution:
    return Distribution(family="fixed", value=value)


def uniform(a: float, b: float) -> Distribution:
    return Distribution(family="uniform", a=a, b=b)


def lognormal(mu: float, sigma: float) -> Distribution:
    return Distribution(family="lognormal", mu=mu, sigma=sigma)


@dataclass(frozen=True)
class ScriptedAction:
    t: float
    kind: ActionKind
    swa: float = 0.0


@dataclass(frozen=True)
class DriverSpec:
    variant: DriverVariant = DriverVariant.NON_RESPONDER
    delay_dist: Distribution = field(default_factory=lambda: fixed(0.0))
    steer_scale_dist: Distribution = field(default_factory=lambda: fixed(1.0))
    steer_hold: float = 1.0
    actions: tuple[ScriptedAction, ...] = ()

    def __post_init__(self):
        if self.variant == DriverVariant.PARAMETRIC:
            errors = []
            if self.delay_dist.support_min() < 0:
                errors.append("take-over delay support must be >= 0")
            if self.steer_scale_dist.support_min() < 0 or (
                self.steer_scale_dist.family == "fixed"
                and self.steer_scale_dist.value <= 0
            ):
                errors.append("steer_scale support must be positive")
            if self.steer_hold <= 0:
                errors.append(f"steer_hold must be positive, got {self.steer_hold}")
            if errors:
                raise ConfigError("invalid parametric driver spec", errors)
        if self.variant == DriverVariant.SCRIPTED:
            _validate_actions(self.actions)

    def to_dict(self) -> dict:
        if self.variant == DriverVariant.NON_RESPONDER:
            return {"variant": "NON_RESPONDER"}
        if self.variant == DriverVariant.PARAMETRIC:
            return {
                "variant": "PARAMETRIC",
                "delay": self.delay_dist.to_dict(),
                "steer_scale": self.steer_scale_dist.to_dict(),
                "steer_hold": self.steer_hold,
            }
        return {
            "variant": "SCRIPTED",
            "actions": [
                {"t": a.t, "kind": a.kind.value, "swa": a.swa}
                if a.kind == ActionKind.STEER
                else {"t": a.t, "kind": a.kind.value}
                for a in self.actions
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DriverSpec":
        variant = DriverVariant(data["variant"])
        if variant == DriverVariant.NON_RESPONDER:
            return cls(variant=variant)
        if variant == DriverVariant.PARAMETRIC:
            return cls(
                variant=variant,
                delay_dist=Distribution.from_dict(data["delay"]),
                steer_scale_dist=Distribution.from_dict(data["steer_scale"]),
                steer_hold=data.get("steer_hold", 1.0),
            )
        actions = tuple(
            ScriptedAction(
                t=entry["t"],
                kind=ActionKind(entry["kind"]),
                swa=entry.get("swa", 0.0),
            )
            for entry in data["actions"]
        )
        return cls(variant=variant, actions=actions)


def non_responder() -> DriverSpec:
    return DriverSpec(variant=DriverVariant.NON_RESPONDER)


def parametric(
    delay: Distribution, steer_scale: Distribution, steer_hold: float = 1.0
) -> DriverSpec:
    return DriverSpec(
        variant=DriverVariant.PARAMETRIC,
        delay_dist=delay,
        steer_scale_dist=steer_scale,
        steer_hold=steer_hold,
    )


def scripted(actions) -> DriverSpec:
    return DriverSpec(variant=DriverVariant.SCRIPTED, actions=tuple(actions))


def _validate_actions(actions) -> None:
    last_t = -math.inf
    takeovers = 0
    for a in actions:
        if a.t <= last_t:
            raise MalformedLogError(
                f"actions must be strictly increasing in t (at t={a.t})"
            )
        last_t = a.t
        if a.kind == ActionKind.TAKE_OVER:
            takeovers += 1
        elif a.kind == ActionKind.STEER:
            if not math.isfinite(a.swa) or abs(a.swa) > MAX_SWA:
                raise MalformedLogError(f"steering action out of range at t={a.t}")
        else:
            raise MalformedLogError(f"unknown action kind {a.kind} at t={a.t}")
    if takeovers > 1:
        raise MalformedLogError(f"at most one TAKE_OVER action allowed, got {takeovers}")


class _DriverBase:
    """Shared call-ordering guard."""

    def __init__(self):
        self._last_t = -math.inf

    def _check_order(self, t: float):
        if t <= self._last_t - _EPS:
            raise OrderingError(f"driver queried with regressing time {t} <= {self._last_t}")
        self._last_t = t


class NonResponderInstance(_DriverBase):
    def act(self, t: float, tor_time: float | None, ideal: float) -> DriverAction:
        self._check_order(t)
        return NONE_ACTION


class ParametricInstance(_DriverBase):
    """Concrete parametric driver with delay and misjudgment factor sampled.

    Emits TAKE_OVER at the first query with t >= tor_time + delay, holds
    steer_scale * ideal-at-take-over for steer_hold seconds, then tracks the
    ideal angle.
    """

    def __init__(self, delay: float, steer_scale: float, steer_hold: float):
        super().__init__()
        self.delay = delay
        self.steer_scale = steer_scale
        self.steer_hold = steer_hold
        self._to_t: float | None = None
        self._held_swa: float | None = None

    @staticmethod
    def _clamp(swa: float) -> float:
        return max(-MAX_SWA, min(MAX_SWA, swa))

    def act(self, t: float, tor_time: float | None, ideal: float) -> DriverAction:
        self._check_order(t)
        if self._to_t is None:
            if tor_time is not None and t >= tor_time + self.delay - _EPS:
                self._to_t = t
                self._held_swa = self._clamp(self.steer_scale * ideal)
                return DriverAction(kind=ActionKind.TAKE_OVER)
            return NONE_ACTION
        if t - self._to_t < self.steer_hold - _EPS:
            return DriverAction(kind=ActionKind.STEER, swa=self._held_swa)
        return DriverAction(kind=ActionKind.STEER, swa=self._clamp(ideal))


class ScriptedInstance(_DriverBase):
    """Replays an explicit action list, one action per tick, in order."""

    def __init__(self, actions: tuple[ScriptedAction, ...]):
        super().__init__()
        self._actions = actions
        self._next = 0

    def act(self, t: float, tor_time: float | None, ideal: float) -> DriverAction:
        self._check_order(t)
        if self._next >= len(self._actions):
            return NONE_ACTION
        action = self._actions[self._next]
        if action.t <= t + _EPS:
            self._next += 1
            if action.kind == ActionKind.TAKE_OVER:
                return DriverAction(kind=ActionKind.TAKE_OVER)
            return DriverAction(kind=ActionKind.STEER, swa=action.swa)
        return NONE_ACTION


DriverInstance = NonResponderInstance | ParametricInstance | ScriptedInstance


def instantiate(spec: DriverSpec, seed: int) -> DriverInstance:
    """Build a concrete driver from a spec.

    Parametric parameters are drawn from a counter-based generator keyed by
    the seed (draw order: delay, then steer scale), so the same (spec, seed)
    pair always yields the same instance regardless of execution order.
    """
    if spec.variant == DriverVariant.NON_RESPONDER:
        return NonResponderInstance()
    if spec.variant == DriverVariant.SCRIPTED:
        return ScriptedInstance(spec.actions)
    rng = np.random.Generator(np.random.Philox(key=seed))
    delay = spec.delay_dist.sample(rng)
    scale = spec.steer_scale_dist.sample(rng)
    if delay < 0 or scale <= 0:
        raise ConfigError(
            f"sampled driver parameters out of range: delay={delay}, scale={scale}"
        )
    return ParametricInstance(delay=delay, steer_scale=scale, steer_hold=spec.steer_hold)


def scripted_from_session(session_log) -> DriverSpec:
    """Convert a recorded session's applied-action log into a scripted spec.

    Accepts an iterable of dicts ({"t": .., "kind": "..", "swa": ..}) or
    ScriptedAction entries. Replaying the result through run_episode with
    the session's config reproduces the interactive episode exactly.
    """
    actions = []
    for entry in session_log:
        if isinstance(entry, ScriptedAction):
            actions.append(entry)
            continue
        try:
            kind = ActionKind(entry["kind"])
            t = float(entry["t"])
            swa = float(entry.get("swa", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedLogError(f"unreadable session log entry: {entry!r}") from exc
        actions.append(ScriptedAction(t=t, kind=kind, swa=swa))
    _validate_actions(actions)
    return scripted(actions)


def session_log_from_trace(trace) -> list[dict]:
    """Extract the applied driver actions from a finished trace.

    The take-over event plus the steering command applied at every tick
    under driver control; feeding this to scripted_from_session yields a
    driver whose replay is tick-for-tick identical.
    """
    from .scenario import EventKind

    to_t = trace.event_time(EventKind.TAKE_OVER)
    if to_t is None:
        return []
    log: list[dict] = [{"t": to_t, "kind": ActionKind.TAKE_OVER.value}]
    for sample in trace.samples:
        if sample.driver_swa is not None and sample.t > to_t + _EPS:
            log.append(
                {"t": sample.t, "kind": ActionKind.STEER.value, "swa": sample.driver_swa}
            )
    return log
