"""Explore/train scheduling as a pure state machine.

Exploration and training are mutually exclusive by construction: the mode is
a single enum value. Three trigger conditions are supported:

* quota: training starts after every N acquisitions, so each learning
  session consumes the same amount of fresh data;
* battery: linear drain while exploring; the first tick strictly below the
  threshold docks the robot, which trains while charging and resumes once
  full;
* day-night: exploration during the day window, training during the night.

`step` is a pure function of (state, event), which makes replaying event
logs trivial.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .errors import ConfigError, ProtocolError

MINUTES_PER_DAY = 24 * 60


class Mode(str, Enum):
    EXPLORING = "exploring"
    TRAINING = "training"
    DOCKED_CHARGING = "docked-charging"


class ConditionKind(str, Enum):
    QUOTA = "quota"
    BATTERY = "battery"
    DAY_NIGHT = "day-night"


class Event(str, Enum):
    TICK = "tick"
    DETECTION_ACQUIRED = "detection-acquired"
    TRAINING_FINISHED = "training-finished"


class Action(str, Enum):
    NONE = "none"
    START_TRAINING = "start-training"
    RESUME_EXPLORING = "resume-exploring"
    DOCK = "dock"


@dataclass(frozen=True)
class Condition:
    kind: ConditionKind = ConditionKind.QUOTA
    quota: int = 10
    battery_threshold: float = 20.0
    drain_rate: float = 1.0
    charge_rate: float = 5.0
    day_start: int = 8 * 60
    night_start: int = 20 * 60

    def __post_init__(self) -> None:
        if self.quota < 1:
            raise ConfigError("quota must be >= 1")
        if not 0 < self.battery_threshold < 100:
            raise ConfigError("battery threshold must lie strictly inside (0, 100)")
        if self.drain_rate <= 0 or self.charge_rate <= 0:
            raise ConfigError("drain and charge rates must be positive")
        for t in (self.day_start, self.night_start):
            if not 0 <= t < MINUTES_PER_DAY:
                raise ConfigError("day/night boundaries must be minutes within one day")
        if self.day_start == self.night_start:
            raise ConfigError("day and night boundaries must differ")


@dataclass(frozen=True)
class SchedulerState:
    condition: Condition
    mode: Mode = Mode.EXPLORING
    battery: float = 100.0
    clock: int = 0
    acquired: int = 0


def _in_day_window(condition: Condition, clock: int) -> bool:
    minute = clock % MINUTES_PER_DAY
    if condition.day_start < condition.night_start:
        return condition.day_start <= minute < condition.night_start
    return minute >= condition.day_start or minute < condition.night_start


def step(state: SchedulerState, event: Event) -> tuple[SchedulerState, Action]:
    """Advance the scheduler by one event; returns the follow-up action.

    The returned action tells the driver what to do now: start a training
    session, dock (which also means train while charging), or resume
    exploration. Detections are ignored outside the exploring mode.
    """
    cond = state.condition
    if event is Event.TICK:
        clock = state.clock + 1
        battery = state.battery
        if state.mode is Mode.EXPLORING:
            battery = max(0.0, battery - cond.drain_rate)
        elif state.mode is Mode.DOCKED_CHARGING:
            battery = min(100.0, battery + cond.charge_rate)
        new = replace(state, clock=clock, battery=battery)

        if cond.kind is ConditionKind.BATTERY:
            if state.mode is Mode.EXPLORING and battery < cond.battery_threshold:
                return replace(new, mode=Mode.DOCKED_CHARGING), Action.DOCK
            if state.mode is Mode.DOCKED_CHARGING and battery >= 100.0:
                return replace(new, mode=Mode.EXPLORING), Action.RESUME_EXPLORING
        elif cond.kind is ConditionKind.DAY_NIGHT:
            day = _in_day_window(cond, clock)
            if state.mode is Mode.EXPLORING and not day:
                return replace(new, mode=Mode.TRAINING, acquired=0), Action.START_TRAINING
            if state.mode is Mode.TRAINING and day:
                return replace(new, mode=Mode.EXPLORING), Action.RESUME_EXPLORING
        return new, Action.NONE

    if event is Event.DETECTION_ACQUIRED:
        if state.mode is not Mode.EXPLORING:
            return state, Action.NONE
        acquired = state.acquired + 1
        if cond.kind is ConditionKind.QUOTA and acquired >= cond.quota:
            return replace(state, mode=Mode.TRAINING, acquired=0), Action.START_TRAINING
        return replace(state, acquired=acquired), Action.NONE

    if event is Event.TRAINING_FINISHED:
        if state.mode is Mode.EXPLORING:
            raise ProtocolError("training-finished event while exploring")
        if state.mode is Mode.TRAINING and cond.kind is ConditionKind.QUOTA:
            return replace(state, mode=Mode.EXPLORING), Action.RESUME_EXPLORING
        # day-night stays in training until the day window returns; a docked
        # robot stays on the charger until the battery is full again.
        return state, Action.NONE

    raise ProtocolError(f"unknown event {event!r}")
