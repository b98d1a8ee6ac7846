"""Deterministic per-tick simulation core, shared by all session modes.

Exactly one writer advances an Engine.  Within a tick the order is pinned:

1. external inputs for tick k (hand samples, buttons) apply in arrival
   order; button routing may transition the selection machine and queues
   internal signals for the task controller;
2. the vehicle steps with this tick's controls, producing the state record
   for tick k+1 (the applied controls ride in its payload for replay);
3. the speed alarm is re-classified; a change logs an alarm record;
4. the task controller runs at tick k+1: confirms are classified against
   their own press tick, then pass detection, the five-second miss check,
   and (re)assignment.

Headless agent outputs enter through the same `apply_*` calls as live
client messages, so recorded logs replay identically for both.
"""

from __future__ import annotations

import math

from ..events import (
    ALARM_CHANGED,
    BUTTON,
    HAND,
    STATE,
    EventLog,
    EventRecord,
    make_header,
)
from ..pointing import HandSample
from ..rng import Stream
from ..session import (
    ACTIVATE,
    CONFIRM_WINDOW_S,
    BUTTONS,
    SelectionState,
    TaskState,
    press_button,
    tick_task,
)
from ..vehicle import IN_RANGE, Controls, VehicleState, classify_speed, step_vehicle
from ..world import OutOfCorridorError, build_scenario, lane1_point, project_to_path
from .config import C2

END_OF_COURSE_MARGIN_M = 5.0


class AbortedSessionError(RuntimeError):
    """Session left the drivable corridor; carries the partial log."""

    def __init__(self, message: str, log: EventLog):
        super().__init__(message)
        self.log = log


class Engine:
    def __init__(self, config):
        config.validate()
        self.config = config
        self.scenario = build_scenario(
            config.effective_scenario_seed, config.course_params, config.scene_params
        )
        self.scene = self.scenario.scene
        self.dt = config.dt
        self.window_ticks = int(round(CONFIRM_WINDOW_S * config.tick_rate_hz))
        self.task_rng = Stream(config.seed, "task")
        self.reassign_rng = Stream(config.seed, "reassignment-delay")

        start, tangent = lane1_point(self.scene.course, 0.0)
        self.vehicle = VehicleState(
            position=start,
            heading_rad=math.atan2(tangent[1], tangent[0]),
            speed_mps=0.0,
            tick=0,
        )
        self.pose = project_to_path(self.scene.course, start, s_hint=0.0)
        self.selection = SelectionState()
        self.task = TaskState()
        self.measurement_open = False
        self.tick = 0
        self.latest_hand: HandSample | None = None
        self.records: list[EventRecord] = []
        self._signals: list[tuple[str, dict, int]] = []
        self.alarm = classify_speed(self.vehicle.speed_mps * 3.6, config.speed)
        self._emit(ALARM_CHANGED, {"status": self.alarm}, 0)

    # -- external inputs (tick = current tick, before the step) -------------

    def apply_hand(self, tip, joint3) -> None:
        self.latest_hand = HandSample(tip=tuple(tip), joint3=tuple(joint3))
        self._emit(HAND, {"tip": list(tip), "joint3": list(joint3)}, self.tick)

    def apply_button(self, button_id: str) -> None:
        if button_id not in BUTTONS:
            raise ValueError(f"unknown button {button_id!r}")
        self._emit(BUTTON, {"id": button_id}, self.tick)
        if button_id == ACTIVATE:
            self._signals.append(("activate_press", {}, self.tick))
        new_state, events = press_button(
            self.selection,
            button_id,
            self.scene,
            self.vehicle,
            self.config.calibration,
            self.config.resolve,
            self.latest_hand,
            self.tick,
            pose=self.pose,
        )
        self.selection = new_state
        for kind, payload in events:
            if kind.startswith("_"):
                self._signals.append((kind[1:], payload, self.tick))
            else:
                self._emit(kind, payload, self.tick)

    # -- advance -------------------------------------------------------------

    def step(self, controls: Controls) -> None:
        raw = {"steer": controls.steer_rad, "accel": controls.accel_mps2}
        self.vehicle = step_vehicle(self.vehicle, controls, self.config.vehicle, self.dt)
        new_tick = self.tick + 1
        try:
            self.pose = project_to_path(
                self.scene.course, self.vehicle.position, s_hint=self.pose.s_m
            )
        except OutOfCorridorError as e:
            raise AbortedSessionError(
                f"vehicle left the corridor: {e}", self.finalize()
            ) from e
        if self.pose.s_m >= self.scene.course.total_length_m - END_OF_COURSE_MARGIN_M:
            raise AbortedSessionError("course exhausted", self.finalize())
        alarm = classify_speed(self.vehicle.speed_mps * 3.6, self.config.speed)
        self._emit(
            STATE,
            {
                "controls": raw,
                "position": list(self.vehicle.position),
                "heading": self.vehicle.heading_rad,
                "speed_mps": self.vehicle.speed_mps,
                "s": self.pose.s_m,
                "lateral": self.pose.lateral_m,
                "alarm": alarm,
            },
            new_tick,
        )
        if alarm != self.alarm:
            self.alarm = alarm
            self._emit(ALARM_CHANGED, {"status": alarm}, new_tick)
        if alarm == IN_RANGE:
            self.measurement_open = True

        signals, self._signals = self._signals, []
        may_assign = self.measurement_open and self.config.condition == C2
        self.task, events = tick_task(
            self.task,
            signals,
            self.pose,
            new_tick,
            self.scene,
            self.task_rng,
            self.reassign_rng,
            self.window_ticks,
            self.config.tick_rate_hz,
            may_assign,
        )
        for kind, payload in events:
            self._emit(kind, payload, new_tick)
        self.tick = new_tick

    def finalize(self) -> EventLog:
        return EventLog(
            header=make_header(self.config.to_doc()), records=list(self.records)
        ).finalize()

    def _emit(self, kind: str, payload: dict, tick: int) -> None:
        self.records.append(
            EventRecord(tick=tick, t_s=tick * self.dt, kind=kind, payload=payload)
        )
