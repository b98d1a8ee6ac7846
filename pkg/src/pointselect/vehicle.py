"""Kinematic bicycle model and the speed alarm policy.

The step integrator is explicit Euler with the heading update applied
before the translation, at a fixed timestep owned by the harness.  The
model is deliberately simple: determinism and replayability outrank
physical fidelity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .world import Course, PathPose, project_to_path

TICK_RATE_HZ = 60
DT_S = 1.0 / TICK_RATE_HZ

IN_RANGE = "in_range"
TOO_SLOW = "too_slow"
TOO_FAST = "too_fast"

MPS_PER_KMH = 1.0 / 3.6


class NumericError(ValueError):
    """Non-finite state or control input."""


@dataclass(frozen=True)
class VehicleParams:
    width_m: float = 1.86
    wheelbase_m: float = 2.8
    max_steer_rad: float = 0.61
    accel_range_mps2: tuple[float, float] = (-6.0, 3.0)
    max_speed_mps: float = 40.0

    def validate(self) -> None:
        if self.width_m <= 0 or self.wheelbase_m <= 0:
            raise ValueError("width_m and wheelbase_m must be > 0")
        lo, hi = self.accel_range_mps2
        if not (lo < 0 < hi):
            raise ValueError("accel_range_mps2 must straddle zero")


@dataclass(frozen=True)
class VehicleState:
    position: tuple[float, float, float]
    heading_rad: float
    speed_mps: float
    tick: int


@dataclass(frozen=True)
class Controls:
    steer_rad: float
    accel_mps2: float


@dataclass(frozen=True)
class SpeedPolicy:
    target_kmh: float
    tolerance_kmh: float = 11.0

    def validate(self) -> None:
        if not (self.target_kmh > self.tolerance_kmh >= 0):
            raise ValueError("require target_kmh > tolerance_kmh >= 0")


def _wrap_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a <= -math.pi:
        a += 2.0 * math.pi
    elif a > math.pi:
        a -= 2.0 * math.pi
    return a


def clamp_controls(controls: Controls, params: VehicleParams) -> Controls:
    lo, hi = params.accel_range_mps2
    return Controls(
        steer_rad=min(max(controls.steer_rad, -params.max_steer_rad), params.max_steer_rad),
        accel_mps2=min(max(controls.accel_mps2, lo), hi),
    )


def step_vehicle(
    state: VehicleState,
    controls: Controls,
    params: VehicleParams = VehicleParams(),
    dt: float = DT_S,
) -> VehicleState:
    """One fixed-dt update; controls are clamped to the vehicle limits."""
    x, y, z = state.position
    if not all(
        map(
            math.isfinite,
            (x, y, state.heading_rad, state.speed_mps, controls.steer_rad, controls.accel_mps2),
        )
    ):
        raise NumericError("non-finite vehicle state or controls")
    c = clamp_controls(controls, params)
    v = state.speed_mps
    heading = _wrap_angle(
        state.heading_rad + (v / params.wheelbase_m) * math.tan(c.steer_rad) * dt
    )
    x += v * dt * math.cos(heading)
    y += v * dt * math.sin(heading)
    speed = v + c.accel_mps2 * dt
    speed = min(max(speed, 0.0), params.max_speed_mps)
    return VehicleState(
        position=(x, y, z), heading_rad=heading, speed_mps=speed, tick=state.tick + 1
    )


def classify_speed(speed_kmh: float, policy: SpeedPolicy) -> str:
    """Alarm status; the +/- tolerance boundaries are inclusive."""
    if speed_kmh < policy.target_kmh - policy.tolerance_kmh:
        return TOO_SLOW
    if speed_kmh > policy.target_kmh + policy.tolerance_kmh:
        return TOO_FAST
    return IN_RANGE


def lateral_deviation(
    course: Course,
    state: VehicleState,
    lane_ref: int = 1,
    s_hint: float | None = None,
) -> float:
    """Signed distance from the lane-`lane_ref` center, positive left."""
    pose = project_to_path(course, state.position, s_hint=s_hint)
    return pose.lateral_m - (lane_ref - 1) * course.lane_width_m


def vehicle_pose(
    course: Course, state: VehicleState, s_hint: float | None = None
) -> PathPose:
    return project_to_path(course, state.position, s_hint=s_hint)
