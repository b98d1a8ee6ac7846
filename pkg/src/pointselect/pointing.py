"""Rough-pointing input: finger ray, angle calibration, candidate resolution.

Cabin frame convention: x right, y up, z forward.  Yaw rotates about y
(positive toward +x), pitch about x (positive toward +y).  A direction
decomposes as d = (cos(pitch)*sin(yaw), sin(pitch), cos(pitch)*cos(yaw)).

Candidate resolution picks, among buildings within range (and ahead of the
ray origin when forward_only is set), the one whose center subtends the
smallest angle with the ray direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .world import Building, PathPose, Scene

ANGLE_TIE_EPS_RAD = 1e-12


class DegenerateHandError(ValueError):
    """Fingertip coincides with the reference joint."""


class DegenerateDirectionError(ValueError):
    """Direction at the yaw/pitch gimbal: pitch is +/- pi/2."""


class CalibrationFitError(ValueError):
    """Calibration sample set is too small or spans too little angle."""


@dataclass(frozen=True)
class HandSample:
    tip: tuple[float, float, float]
    joint3: tuple[float, float, float]
    t: float = 0.0


@dataclass(frozen=True)
class Ray:
    origin: tuple[float, float, float]
    dir: tuple[float, float, float]


@dataclass(frozen=True)
class Calibration:
    yaw_gain: float = 1.0
    yaw_offset_rad: float = 0.0
    pitch_gain: float = 1.0
    pitch_offset_rad: float = 0.0

    def validate(self) -> None:
        if self.yaw_gain <= 0 or self.pitch_gain <= 0:
            raise ValueError("calibration gains must be > 0")


IDENTITY_CALIBRATION = Calibration()


@dataclass(frozen=True)
class ResolveParams:
    range_m: float = 150.0
    max_angle_rad: float = 0.52
    forward_only: bool = True

    def validate(self) -> None:
        if self.range_m <= 0:
            raise ValueError("range_m must be > 0")
        if not (0.0 < self.max_angle_rad <= math.pi):
            raise ValueError("max_angle_rad must be in (0, pi]")


def _normalize(v: tuple[float, float, float]) -> tuple[float, float, float]:
    n = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    return (v[0] / n, v[1] / n, v[2] / n)


def build_original_ray(hand: HandSample) -> Ray:
    """Ray from the third index-finger joint through the fingertip."""
    if not all(map(math.isfinite, (*hand.tip, *hand.joint3))):
        raise DegenerateHandError("non-finite hand sample")
    dx = hand.tip[0] - hand.joint3[0]
    dy = hand.tip[1] - hand.joint3[1]
    dz = hand.tip[2] - hand.joint3[2]
    if math.sqrt(dx * dx + dy * dy + dz * dz) < 1e-12:
        raise DegenerateHandError("fingertip coincides with joint3; no direction")
    return Ray(origin=hand.tip, dir=_normalize((dx, dy, dz)))


def dir_to_yaw_pitch(d: tuple[float, float, float]) -> tuple[float, float]:
    horiz = math.hypot(d[0], d[2])
    if horiz < 1e-12:
        raise DegenerateDirectionError("pitch at +/- pi/2: yaw is undefined")
    return math.atan2(d[0], d[2]), math.atan2(d[1], horiz)


def yaw_pitch_to_dir(yaw: float, pitch: float) -> tuple[float, float, float]:
    cp = math.cos(pitch)
    return (cp * math.sin(yaw), math.sin(pitch), cp * math.cos(yaw))


def apply_calibration(cal: Calibration, ray: Ray) -> Ray:
    """Affine yaw/pitch correction; the origin is untouched."""
    yaw, pitch = dir_to_yaw_pitch(ray.dir)
    yaw = cal.yaw_gain * yaw + cal.yaw_offset_rad
    pitch = cal.pitch_gain * pitch + cal.pitch_offset_rad
    return Ray(origin=ray.origin, dir=yaw_pitch_to_dir(yaw, pitch))


@dataclass(frozen=True)
class CalibrationFit:
    calibration: Calibration
    yaw_rms_rad: float
    pitch_rms_rad: float


def _fit_axis(measured: list[float], true: list[float]) -> tuple[float, float]:
    n = len(measured)
    mx = math.fsum(measured) / n
    my = math.fsum(true) / n
    sxx = math.fsum((x - mx) * (x - mx) for x in measured)
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(measured, true))
    if sxx < 1e-12:
        raise CalibrationFitError("calibration samples are angularly degenerate")
    gain = sxy / sxx
    if gain <= 0:
        raise CalibrationFitError("fitted gain is non-positive; samples inconsistent")
    return gain, my - gain * mx


def fit_calibration(
    pairs: list[tuple[HandSample, tuple[float, float, float]]]
) -> CalibrationFit:
    """Per-axis affine least squares from (sample, true direction) pairs.

    Requires at least 4 pairs spanning at least 10 degrees in both yaw
    and pitch, otherwise the fit is declared ill-conditioned.
    """
    if len(pairs) < 4:
        raise CalibrationFitError(f"need >= 4 calibration pairs, got {len(pairs)}")
    yaw_m, pitch_m, yaw_t, pitch_t = [], [], [], []
    for hand, true_dir in pairs:
        my, mp = dir_to_yaw_pitch(build_original_ray(hand).dir)
        ty, tp = dir_to_yaw_pitch(_normalize(true_dir))
        yaw_m.append(my)
        pitch_m.append(mp)
        yaw_t.append(ty)
        pitch_t.append(tp)
    min_span = math.radians(10.0)
    if max(yaw_m) - min(yaw_m) < min_span or max(pitch_m) - min(pitch_m) < min_span:
        raise CalibrationFitError("calibration pairs span < 10 degrees in yaw or pitch")
    yg, yo = _fit_axis(yaw_m, yaw_t)
    pg, po = _fit_axis(pitch_m, pitch_t)
    cal = Calibration(yaw_gain=yg, yaw_offset_rad=yo, pitch_gain=pg, pitch_offset_rad=po)
    yaw_rms = math.sqrt(
        math.fsum((yg * m + yo - t) ** 2 for m, t in zip(yaw_m, yaw_t)) / len(pairs)
    )
    pitch_rms = math.sqrt(
        math.fsum((pg * m + po - t) ** 2 for m, t in zip(pitch_m, pitch_t)) / len(pairs)
    )
    return CalibrationFit(cal, yaw_rms, pitch_rms)


def angle_to_building(ray: Ray, building: Building) -> tuple[float, float]:
    """(angle to the building center, distance); angle in [0, pi]."""
    rx = building.center_world[0] - ray.origin[0]
    ry = building.center_world[1] - ray.origin[1]
    rz = building.center_world[2] - ray.origin[2]
    dist = math.sqrt(rx * rx + ry * ry + rz * rz)
    if dist == 0.0:
        return 0.0, 0.0
    dot = (ray.dir[0] * rx + ray.dir[1] * ry + ray.dir[2] * rz) / dist
    dot = min(max(dot, -1.0), 1.0)
    return math.acos(dot), dist


def resolve_candidate(
    ray: Ray,
    scene: Scene,
    vehicle_pose: PathPose,
    params: ResolveParams = ResolveParams(),
) -> int | None:
    """Minimum-angle building id for a world-frame ray, or None on a miss.

    Ties within ANGLE_TIE_EPS_RAD fall to the smaller distance, then the
    smaller id, so resolution is deterministic on symmetric scenes.
    """
    best: tuple[float, float, int] | None = None
    for b in scene.buildings:
        if params.forward_only and b.s_m <= vehicle_pose.s_m:
            continue
        angle, dist = angle_to_building(ray, b)
        if dist > params.range_m:
            continue
        if best is None:
            best = (angle, dist, b.id)
            continue
        if angle < best[0] - ANGLE_TIE_EPS_RAD:
            best = (angle, dist, b.id)
        elif angle <= best[0] + ANGLE_TIE_EPS_RAD and (
            dist < best[1] or (dist == best[1] and b.id < best[2])
        ):
            best = (angle, dist, b.id)
    if best is None or best[0] > params.max_angle_rad:
        return None
    return best[2]


def cabin_to_world(
    ray: Ray, vehicle_position: tuple[float, float, float], heading_rad: float
) -> Ray:
    """Rotate/translate a cabin-frame ray into the world frame.

    Cabin +z (forward) maps to the vehicle heading in the ground plane,
    +x (right) to heading - 90 degrees, +y (up) to world +z.
    """
    ch, sh = math.cos(heading_rad), math.sin(heading_rad)
    fwd = (ch, sh, 0.0)
    right = (sh, -ch, 0.0)
    up = (0.0, 0.0, 1.0)

    def to_world(v: tuple[float, float, float]) -> tuple[float, float, float]:
        return (
            v[0] * right[0] + v[1] * up[0] + v[2] * fwd[0],
            v[0] * right[1] + v[1] * up[1] + v[2] * fwd[1],
            v[0] * right[2] + v[1] * up[2] + v[2] * fwd[2],
        )

    o = to_world(ray.origin)
    d = to_world(ray.dir)
    return Ray(
        origin=(
            o[0] + vehicle_position[0],
            o[1] + vehicle_position[1],
            o[2] + vehicle_position[2],
        ),
        dir=d,
    )


def world_to_cabin_dir(
    d: tuple[float, float, float], heading_rad: float
) -> tuple[float, float, float]:
    """Inverse rotation of `cabin_to_world` for directions."""
    ch, sh = math.cos(heading_rad), math.sin(heading_rad)
    right = (sh, -ch, 0.0)
    up = (0.0, 0.0, 1.0)
    fwd = (ch, sh, 0.0)
    return (
        d[0] * right[0] + d[1] * right[1] + d[2] * right[2],
        d[0] * up[0] + d[1] * up[1] + d[2] * up[2],
        d[0] * fwd[0] + d[1] * fwd[1] + d[2] * fwd[2],
    )
