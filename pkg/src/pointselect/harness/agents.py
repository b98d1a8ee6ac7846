"""Synthetic driver and pointer agents for headless sessions.

The driver holds the lane-1 center with pure-pursuit steering and a
speed-proportional lookahead, plus proportional speed control.  The
pointer models a human doing the input task: a reaction delay before each
perception-driven action, an aimed activation with Gaussian angular noise,
arrow corrections chosen by shortest navigation path, and a confirm delay
before the final press.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..pointing import (
    HandSample,
    Ray,
    cabin_to_world,
    dir_to_yaw_pitch,
    world_to_cabin_dir,
    yaw_pitch_to_dir,
)
from ..rng import Stream
from ..session import (
    ACTIVATE,
    CANCEL,
    CONFIRM,
    FINE_SELECT,
    IDLE,
    SelectionState,
    TaskState,
    arrow_path,
)
from ..vehicle import Controls, SpeedPolicy, VehicleState
from ..world import Course, PathPose, Scene, lane1_point
from .config import DriverParams, PointerParams

# cabin-frame pointing anchor: roughly where a raised right hand sits
HAND_ANCHOR = (0.25, 0.95, 0.35)
FINGER_LEN_M = 0.07


class DriverAgent:
    def __init__(self, params: DriverParams, policy: SpeedPolicy, wheelbase_m: float):
        self.params = params
        self.target_mps = policy.target_kmh / 3.6
        self.wheelbase_m = wheelbase_m

    def step(self, course: Course, pose: PathPose, vehicle: VehicleState) -> Controls:
        p = self.params
        v = vehicle.speed_mps
        lookahead = min(max(p.lookahead_gain_s * v, p.lookahead_min_m), p.lookahead_max_m)
        s_goal = min(pose.s_m + lookahead, course.total_length_m)
        goal, _ = lane1_point(course, s_goal)
        gx = goal[0] - vehicle.position[0]
        gy = goal[1] - vehicle.position[1]
        dist = math.hypot(gx, gy)
        alpha = math.atan2(gy, gx) - vehicle.heading_rad
        alpha = math.atan2(math.sin(alpha), math.cos(alpha))
        if dist > 1e-6:
            steer = math.atan2(2.0 * self.wheelbase_m * math.sin(alpha), dist)
        else:
            steer = 0.0
        accel = p.speed_kp * (self.target_mps - v)
        return Controls(steer_rad=steer, accel_mps2=accel)


@dataclass
class PointerAction:
    kind: str  # "hand" | "button"
    hand: HandSample | None = None
    button: str | None = None


class PointerAgent:
    """Emits at most one (hand+activate) or button action per tick."""

    def __init__(self, params: PointerParams, rng: Stream, tick_rate_hz: int):
        self.params = params
        self.rng = rng
        self.noise_rad = math.radians(params.noise_deg)
        self.reaction_ticks = max(1, int(round(params.reaction_s * tick_rate_hz)))
        self.confirm_ticks = max(1, int(round(params.confirm_s * tick_rate_hz)))
        self.current_target: int | None = None
        self.decision_tick = 0
        self.confirm_at: int | None = None

    def _aim(self, center: tuple[float, float, float], vehicle: VehicleState) -> HandSample:
        anchor_world = cabin_to_world(
            Ray(origin=HAND_ANCHOR, dir=(0.0, 0.0, 1.0)),
            vehicle.position,
            vehicle.heading_rad,
        ).origin
        dx = center[0] - anchor_world[0]
        dy = center[1] - anchor_world[1]
        dz = center[2] - anchor_world[2]
        n = math.sqrt(dx * dx + dy * dy + dz * dz)
        d_cabin = world_to_cabin_dir((dx / n, dy / n, dz / n), vehicle.heading_rad)
        yaw, pitch = dir_to_yaw_pitch(d_cabin)
        yaw += self.rng.normal(0.0, self.noise_rad)
        pitch += self.rng.normal(0.0, self.noise_rad)
        d = yaw_pitch_to_dir(yaw, pitch)
        tip = (
            HAND_ANCHOR[0] + FINGER_LEN_M * d[0],
            HAND_ANCHOR[1] + FINGER_LEN_M * d[1],
            HAND_ANCHOR[2] + FINGER_LEN_M * d[2],
        )
        return HandSample(tip=tip, joint3=HAND_ANCHOR)

    def step(
        self,
        tick: int,
        task: TaskState,
        selection: SelectionState,
        scene: Scene,
        vehicle: VehicleState,
    ) -> list[PointerAction]:
        if task.target_id is None:
            self.current_target = None
            self.confirm_at = None
            if selection.phase == FINE_SELECT:
                return [PointerAction("button", button=CANCEL)]  # target lapsed
            return []
        if task.target_id != self.current_target:
            self.current_target = task.target_id
            self.decision_tick = (task.assigned_tick or tick) + self.reaction_ticks
            self.confirm_at = None
        target = scene.buildings[task.target_id]
        if selection.phase == IDLE:
            self.confirm_at = None
            if tick >= self.decision_tick:
                hand = self._aim(target.center_world, vehicle)
                self.decision_tick = tick + self.reaction_ticks
                return [
                    PointerAction("hand", hand=hand),
                    PointerAction("button", button=ACTIVATE),
                ]
            return []
        # fine selection
        if selection.candidate_id == task.target_id:
            if tick < self.decision_tick:
                return []
            if self.confirm_at is None:
                self.confirm_at = self.decision_tick + self.confirm_ticks
            if tick >= self.confirm_at:
                self.confirm_at = None
                self.decision_tick = tick + self.reaction_ticks
                return [PointerAction("button", button=CONFIRM)]
            return []
        self.confirm_at = None
        if tick < self.decision_tick:
            return []
        assert selection.snapshot is not None and selection.candidate_id is not None
        path = arrow_path(scene, selection.snapshot, selection.candidate_id, task.target_id)
        self.decision_tick = tick + self.reaction_ticks
        if path:
            return [PointerAction("button", button=path[0])]
        return [PointerAction("button", button=CANCEL)]  # unreachable; retry aim
