"""Procedural driving course and roadside scene.

The course is a chain of C1-continuous cubic Bezier segments in the z=0
plane, arc-length parameterized through a sampled lookup table (0.25 m
resolution) with local Newton refinement.  Buildings are placed on both
sides of the road with randomized sizes, setbacks and gaps.

Conventions
-----------
* World frame: x/y ground plane, z up.  Path tangent T=(tx, ty, 0); the
  left normal is N=(-ty, tx, 0).
* The driving reference line is the lane-1 center: the road centerline
  offset by half a lane toward the right side.  `PathPose.lateral_m` is
  measured from that line, positive toward the left.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .rng import Stream

TABLE_RESOLUTION_M = 0.25
PROJECTION_CORRIDOR_M = 200.0
_WINDOW_HALF_M = 10.0

LEFT = "left"
RIGHT = "right"

SCENARIO_VERSION = 1

Point = tuple[float, float]
Segment = tuple[Point, Point, Point, Point]


class ParamError(ValueError):
    """A parameter set violates its own constraints."""


class OutOfCorridorError(ValueError):
    """Queried position is farther than the projection corridor allows."""


class PathRangeError(ValueError):
    """Arc length outside [0, total_length]."""


class SceneGenerationError(ValueError):
    """Scene constraints cannot be satisfied on the given course."""


@dataclass(frozen=True)
class CourseParams:
    lane_width_m: float = 3.3
    lane_count: int = 2
    total_length_m: float = 7000.0
    segment_length_range_m: tuple[float, float] = (60.0, 140.0)
    max_curvature_per_m: float = 0.006
    straight_fraction: float = 0.5

    def validate(self) -> None:
        if self.lane_width_m <= 0:
            raise ParamError("lane_width_m must be > 0")
        if self.lane_count < 1:
            raise ParamError("lane_count must be >= 1")
        if self.total_length_m <= 0:
            raise ParamError("total_length_m must be > 0")
        lo, hi = self.segment_length_range_m
        if not (0 < lo <= hi):
            raise ParamError("segment_length_range_m must satisfy 0 < lo <= hi")
        if self.max_curvature_per_m < 0:
            raise ParamError("max_curvature_per_m must be >= 0")
        if not 0.0 <= self.straight_fraction <= 1.0:
            raise ParamError("straight_fraction must be in [0, 1]")
        if self.max_curvature_per_m == 0 and self.straight_fraction < 1.0:
            raise ParamError(
                "max_curvature_per_m=0 requires straight_fraction=1.0 "
                "(curved segments would be impossible)"
            )

    @property
    def road_half_width_m(self) -> float:
        return 0.5 * self.lane_width_m * self.lane_count

    @property
    def lane1_offset_m(self) -> float:
        """Offset of the lane-1 center from the road centerline (rightward)."""
        return 0.5 * self.lane_width_m


@dataclass(frozen=True)
class SceneParams:
    building_min_m: tuple[float, float, float] = (10.0, 10.0, 8.0)
    building_max_m: tuple[float, float, float] = (20.0, 20.0, 15.0)
    setback_range_m: tuple[float, float] = (5.0, 8.0)
    gap_range_m: tuple[float, float] = (10.0, 30.0)
    color_count: int = 10
    start_offset_m: float = 100.0

    def validate(self) -> None:
        if any(a > b for a, b in zip(self.building_min_m, self.building_max_m)):
            raise ParamError("building_min_m must be <= building_max_m componentwise")
        if any(a <= 0 for a in self.building_min_m):
            raise ParamError("building_min_m components must be > 0")
        if self.setback_range_m[0] > self.setback_range_m[1]:
            raise ParamError("setback_range_m lower bound exceeds upper bound")
        if self.setback_range_m[0] < 0:
            raise ParamError("setback_range_m must be non-negative")
        if self.gap_range_m[0] > self.gap_range_m[1]:
            raise ParamError("gap_range_m lower bound exceeds upper bound")
        if self.gap_range_m[0] < 0:
            raise ParamError("gap_range_m must be non-negative")
        if self.color_count < 1:
            raise ParamError("color_count must be >= 1")
        if self.start_offset_m < 0:
            raise ParamError("start_offset_m must be >= 0")


@dataclass(frozen=True)
class PathPose:
    s_m: float
    lateral_m: float
    path_heading_rad: float


@dataclass(frozen=True)
class Building:
    id: int
    s_m: float
    side: str
    setback_m: float
    size_m: tuple[float, float, float]  # width along road, depth, height
    color_index: int
    center_world: tuple[float, float, float]


# -- cubic Bezier helpers (scalar, hot path) --------------------------------


def _bz_point(seg: Segment, t: float) -> tuple[float, float]:
    (x0, y0), (x1, y1), (x2, y2), (x3, y3) = seg
    u = 1.0 - t
    a = u * u * u
    b = 3.0 * u * u * t
    c = 3.0 * u * t * t
    d = t * t * t
    return (a * x0 + b * x1 + c * x2 + d * x3, a * y0 + b * y1 + c * y2 + d * y3)


def _bz_deriv(seg: Segment, t: float) -> tuple[float, float]:
    (x0, y0), (x1, y1), (x2, y2), (x3, y3) = seg
    u = 1.0 - t
    a = 3.0 * u * u
    b = 6.0 * u * t
    c = 3.0 * t * t
    return (
        a * (x1 - x0) + b * (x2 - x1) + c * (x3 - x2),
        a * (y1 - y0) + b * (y2 - y1) + c * (y3 - y2),
    )


def _bz_second(seg: Segment, t: float) -> tuple[float, float]:
    (x0, y0), (x1, y1), (x2, y2), (x3, y3) = seg
    u = 1.0 - t
    return (
        6.0 * u * (x2 - 2.0 * x1 + x0) + 6.0 * t * (x3 - 2.0 * x2 + x1),
        6.0 * u * (y2 - 2.0 * y1 + y0) + 6.0 * t * (y3 - 2.0 * y2 + y1),
    )


def bezier_curvature(seg: Segment, t: float) -> float:
    dx, dy = _bz_deriv(seg, t)
    ddx, ddy = _bz_second(seg, t)
    speed = math.hypot(dx, dy)
    if speed == 0.0:
        return 0.0
    return (dx * ddy - dy * ddx) / (speed * speed * speed)


def _bz_split_left(seg: Segment, t: float) -> Segment:
    """Left piece of a de Casteljau split at t (keeps C1 at the cut)."""

    def lerp(p: Point, q: Point, t: float) -> Point:
        return (p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t)

    p0, p1, p2, p3 = seg
    a = lerp(p0, p1, t)
    b = lerp(p1, p2, t)
    c = lerp(p2, p3, t)
    ab = lerp(a, b, t)
    bc = lerp(b, c, t)
    m = lerp(ab, bc, t)
    return (p0, a, ab, m)


def _polygon_length(seg: Segment) -> float:
    p0, p1, p2, p3 = seg
    return (
        math.hypot(p1[0] - p0[0], p1[1] - p0[1])
        + math.hypot(p2[0] - p1[0], p2[1] - p1[1])
        + math.hypot(p3[0] - p2[0], p3[1] - p2[1])
    )


@dataclass(frozen=True)
class Course:
    segments: tuple[Segment, ...]
    lane_width_m: float
    lane_count: int
    table_s: np.ndarray = field(compare=False, repr=False)
    table_x: np.ndarray = field(compare=False, repr=False)
    table_y: np.ndarray = field(compare=False, repr=False)
    table_seg: np.ndarray = field(compare=False, repr=False)
    table_t: np.ndarray = field(compare=False, repr=False)

    @property
    def total_length_m(self) -> float:
        return float(self.table_s[-1])

    @property
    def road_half_width_m(self) -> float:
        return 0.5 * self.lane_width_m * self.lane_count

    @property
    def lane1_offset_m(self) -> float:
        """Offset of the lane-1 center from the centerline (toward the right)."""
        return 0.5 * self.lane_width_m


def _build_table(segments: tuple[Segment, ...]) -> dict:
    ss: list[np.ndarray] = []
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    seg_idx: list[np.ndarray] = []
    ts: list[np.ndarray] = []
    s_acc = 0.0
    prev_x = prev_y = None
    for k, seg in enumerate(segments):
        n = max(4, int(math.ceil(_polygon_length(seg) / TABLE_RESOLUTION_M)))
        t = np.linspace(0.0, 1.0, n + 1)
        (x0, y0), (x1, y1), (x2, y2), (x3, y3) = seg
        u = 1.0 - t
        a = u * u * u
        b = 3.0 * u * u * t
        c = 3.0 * u * t * t
        d = t * t * t
        px = a * x0 + b * x1 + c * x2 + d * x3
        py = a * y0 + b * y1 + c * y2 + d * y3
        if k > 0:
            # first sample duplicates the previous segment's endpoint
            t, px, py = t[1:], px[1:], py[1:]
            chords = np.hypot(np.diff(px, prepend=prev_x), np.diff(py, prepend=prev_y))
        else:
            chords = np.hypot(np.diff(px, prepend=px[0]), np.diff(py, prepend=py[0]))
        s = s_acc + np.cumsum(chords)
        if k == 0:
            s[0] = 0.0
        s_acc = float(s[-1])
        prev_x, prev_y = float(px[-1]), float(py[-1])
        ss.append(s)
        xs.append(px)
        ys.append(py)
        seg_idx.append(np.full(len(t), k, dtype=np.int32))
        ts.append(t)
    return {
        "table_s": np.concatenate(ss),
        "table_x": np.concatenate(xs),
        "table_y": np.concatenate(ys),
        "table_seg": np.concatenate(seg_idx),
        "table_t": np.concatenate(ts),
    }


def make_course(
    segments: tuple[Segment, ...], lane_width_m: float = 3.3, lane_count: int = 2
) -> Course:
    return Course(
        segments=segments,
        lane_width_m=lane_width_m,
        lane_count=lane_count,
        **_build_table(segments),
    )


def _straight_segment(x: float, y: float, theta: float, length: float) -> Segment:
    dx, dy = math.cos(theta), math.sin(theta)
    return (
        (x, y),
        (x + dx * length / 3.0, y + dy * length / 3.0),
        (x + dx * 2.0 * length / 3.0, y + dy * 2.0 * length / 3.0),
        (x + dx * length, y + dy * length),
    )


def _arc_segment(
    x: float, y: float, theta: float, kappa_signed: float, arc_len: float
) -> tuple[Segment, float, float, float]:
    """Cubic approximation of a circular arc; returns (seg, end x, y, heading)."""
    phi = kappa_signed * arc_len
    radius = 1.0 / abs(kappa_signed)
    handle = (4.0 / 3.0) * math.tan(abs(phi) / 4.0) * radius
    # center = P + (1/kappa)*N with N the left normal; signed kappa picks the side
    cx = x + (-math.sin(theta)) / kappa_signed
    cy = y + (math.cos(theta)) / kappa_signed
    theta_end = theta + phi
    # rotate start point about the center by phi
    ca, sa = math.cos(phi), math.sin(phi)
    rx, ry = x - cx, y - cy
    ex = cx + ca * rx - sa * ry
    ey = cy + sa * rx + ca * ry
    seg = (
        (x, y),
        (x + math.cos(theta) * handle, y + math.sin(theta) * handle),
        (ex - math.cos(theta_end) * handle, ey - math.sin(theta_end) * handle),
        (ex, ey),
    )
    return seg, ex, ey, theta_end


def generate_course(seed: int, params: CourseParams = CourseParams()) -> Course:
    """Deterministic course from (seed, params); equal inputs, equal output."""
    params.validate()
    rng = Stream(seed, "course")
    lo, hi = params.segment_length_range_m
    segments: list[Segment] = []
    x, y, theta = 0.0, 0.0, 0.0
    built = 0.0
    while built < params.total_length_m:
        length = rng.uniform(lo, hi)
        straight = rng.uniform() < params.straight_fraction
        if straight or params.max_curvature_per_m == 0.0:
            segments.append(_straight_segment(x, y, theta, length))
            x += math.cos(theta) * length
            y += math.sin(theta) * length
            built += length
        else:
            kappa = rng.uniform(0.25, 0.95) * params.max_curvature_per_m
            if rng.uniform() < 0.5:
                kappa = -kappa
            # cap the turn at 90 degrees so the arc approximation stays tight
            arc_len = min(length, (math.pi / 2.0) / abs(kappa))
            seg, x, y, theta = _arc_segment(x, y, theta, kappa, arc_len)
            segments.append(seg)
            built += arc_len
    course = make_course(tuple(segments), params.lane_width_m, params.lane_count)
    return _trim_course(course, params.total_length_m)


def _trim_course(course: Course, target_length: float) -> Course:
    if course.total_length_m <= target_length:
        return course
    i = int(np.searchsorted(course.table_s, target_length, side="right")) - 1
    i = min(max(i, 0), len(course.table_s) - 2)
    k, t = _bracket_param(course, i, target_length)
    if t <= 1e-9:
        segments = course.segments[:k]
        if not segments:
            raise ParamError("total_length_m shorter than the first segment sample")
    else:
        segments = course.segments[:k] + (_bz_split_left(course.segments[k], t),)
    return make_course(tuple(segments), course.lane_width_m, course.lane_count)


def _bracket_param(course: Course, i: int, s: float) -> tuple[int, float]:
    """Segment index and interpolated parameter for s in table bracket [i, i+1]."""
    s0, s1 = float(course.table_s[i]), float(course.table_s[i + 1])
    k0, k1 = int(course.table_seg[i]), int(course.table_seg[i + 1])
    frac = 0.0 if s1 == s0 else (s - s0) / (s1 - s0)
    if k0 == k1:
        t0, t1 = float(course.table_t[i]), float(course.table_t[i + 1])
        return k0, t0 + frac * (t1 - t0)
    # bracket spans a segment boundary: the left anchor is t=0 of segment k1
    return k1, frac * float(course.table_t[i + 1])


def path_point(
    course: Course, s_m: float
) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    """Position and unit tangent at arc length s (z=0 plane).

    Linear parameter interpolation between 0.25 m table samples keeps the
    position error below 0.1 mm at the curvature bound, so no further
    refinement is needed here.
    """
    total = course.total_length_m
    if not (-1e-9 <= s_m <= total + 1e-9):
        raise PathRangeError(f"s={s_m} outside [0, {total}]")
    s = min(max(s_m, 0.0), total)
    i = int(np.searchsorted(course.table_s, s, side="right")) - 1
    i = min(max(i, 0), len(course.table_s) - 2)
    k, t = _bracket_param(course, i, s)
    seg = course.segments[k]
    px, py = _bz_point(seg, t)
    dx, dy = _bz_deriv(seg, t)
    norm = math.hypot(dx, dy)
    return (px, py, 0.0), (dx / norm, dy / norm, 0.0)


def left_normal(tangent: tuple[float, float, float]) -> tuple[float, float, float]:
    return (-tangent[1], tangent[0], 0.0)


def project_to_path(
    course: Course,
    position: tuple[float, float, float],
    s_hint: float | None = None,
) -> PathPose:
    """Nearest-point projection onto the centerline.

    `lateral_m` of the returned pose is measured from the lane-1 center
    (half a lane right of the centerline), positive toward the left.
    A hint restricts the search to a window around the expected s; the
    result is identical to the full scan whenever the true minimum lies
    inside the window.
    """
    px, py = position[0], position[1]
    table_s = course.table_s
    n = len(table_s)
    lo_idx, hi_idx = 0, n
    if s_hint is not None:
        lo_idx = int(np.searchsorted(table_s, s_hint - _WINDOW_HALF_M, side="left"))
        hi_idx = int(np.searchsorted(table_s, s_hint + _WINDOW_HALF_M, side="right"))
        lo_idx = max(lo_idx - 1, 0)
        hi_idx = min(hi_idx + 1, n)
        if hi_idx - lo_idx < 3:
            lo_idx, hi_idx = 0, n
    dx = course.table_x[lo_idx:hi_idx] - px
    dy = course.table_y[lo_idx:hi_idx] - py
    d2 = dx * dx + dy * dy
    j = int(np.argmin(d2))
    i = lo_idx + j
    windowed = s_hint is not None and (lo_idx > 0 or hi_idx < n)
    if windowed and (
        (j == 0 and lo_idx > 0) or (j == hi_idx - lo_idx - 1 and hi_idx < n)
    ):
        return project_to_path(course, position)  # minimum escaped the window

    s = float(table_s[i])
    if 0 < i < n - 1:
        d0 = float(
            (course.table_x[i - 1] - px) ** 2 + (course.table_y[i - 1] - py) ** 2
        )
        d1 = float(d2[j])
        d2n = float(
            (course.table_x[i + 1] - px) ** 2 + (course.table_y[i + 1] - py) ** 2
        )
        denom = d0 - 2.0 * d1 + d2n
        if denom > 0:
            offset = 0.5 * (d0 - d2n) / denom
            offset = min(max(offset, -1.0), 1.0)
            ds_step = 0.5 * (float(table_s[i + 1]) - float(table_s[i - 1]))
            s += offset * ds_step
    total = course.total_length_m
    s = min(max(s, 0.0), total)
    # Newton polish: along-track error is dot(p - c(s), T(s)) in arc-length param
    (cx, cy, _), (tx, ty, _) = path_point(course, s)
    s += (px - cx) * tx + (py - cy) * ty
    s = min(max(s, 0.0), total)
    (cx, cy, _), tang = path_point(course, s)
    nx, ny, _ = left_normal(tang)
    dist = math.hypot(px - cx, py - cy)
    if dist > PROJECTION_CORRIDOR_M:
        raise OutOfCorridorError(
            f"position {dist:.1f} m from the path exceeds the "
            f"{PROJECTION_CORRIDOR_M:.0f} m corridor"
        )
    lateral_center = (px - cx) * nx + (py - cy) * ny
    heading = math.atan2(tang[1], tang[0])
    return PathPose(
        s_m=s,
        lateral_m=lateral_center + course.lane1_offset_m,
        path_heading_rad=heading,
    )


def lane1_point(
    course: Course, s_m: float
) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    """Point and tangent on the lane-1 center (the driving reference line)."""
    pos, tang = path_point(course, s_m)
    nx, ny, _ = left_normal(tang)
    off = course.lane1_offset_m
    return (pos[0] - nx * off, pos[1] - ny * off, 0.0), tang


@dataclass(frozen=True)
class Scene:
    course: Course
    buildings: tuple[Building, ...]

    def building_by_id(self, bid: int) -> Building:
        return self.buildings[bid]


def generate_scene(
    seed: int,
    course: Course,
    params: SceneParams = SceneParams(),
) -> Scene:
    """Place buildings along both sides; same (seed, course, params), same scene."""
    params.validate()
    total = course.total_length_m
    if total <= params.start_offset_m + params.gap_range_m[0]:
        raise SceneGenerationError(
            "course shorter than start_offset_m plus one gap; nothing to place"
        )
    rng = Stream(seed, "scene")
    half_road = course.road_half_width_m
    raw: list[dict] = []
    for side in (LEFT, RIGHT):
        edge = params.start_offset_m
        while True:
            w = rng.uniform(params.building_min_m[0], params.building_max_m[0])
            d = rng.uniform(params.building_min_m[1], params.building_max_m[1])
            h = rng.uniform(params.building_min_m[2], params.building_max_m[2])
            setback = rng.uniform(*params.setback_range_m)
            color = rng.randint(params.color_count)
            s_center = edge + 0.5 * w
            if s_center + 0.5 * w > total:
                break
            pos, tang = path_point(course, s_center)
            nx, ny, _ = left_normal(tang)
            lat = half_road + setback + 0.5 * d
            sign = 1.0 if side == LEFT else -1.0
            raw.append(
                {
                    "s_m": s_center,
                    "side": side,
                    "setback_m": setback,
                    "size_m": (w, d, h),
                    "color_index": color,
                    "center_world": (
                        pos[0] + sign * nx * lat,
                        pos[1] + sign * ny * lat,
                        0.5 * h,
                    ),
                }
            )
            gap = rng.uniform(*params.gap_range_m)
            edge = s_center + 0.5 * w + gap
    if not raw:
        raise SceneGenerationError("no building fits on the course")
    raw.sort(key=lambda b: (b["s_m"], b["side"]))
    buildings = tuple(Building(id=i, **b) for i, b in enumerate(raw))
    return Scene(course=course, buildings=buildings)


def building_footprint(
    scene: Scene, building: Building
) -> tuple[tuple[float, float], ...]:
    """Footprint corners (xy), axis aligned to the path tangent at its s."""
    _, tang = path_point(scene.course, building.s_m)
    tx, ty = tang[0], tang[1]
    nx, ny, _ = left_normal(tang)
    cx, cy = building.center_world[0], building.center_world[1]
    hw = 0.5 * building.size_m[0]
    hd = 0.5 * building.size_m[1]
    return (
        (cx - tx * hw - nx * hd, cy - ty * hw - ny * hd),
        (cx + tx * hw - nx * hd, cy + ty * hw - ny * hd),
        (cx + tx * hw + nx * hd, cy + ty * hw + ny * hd),
        (cx - tx * hw + nx * hd, cy - ty * hw + ny * hd),
    )


@dataclass(frozen=True)
class Violation:
    constraint: str
    building_ids: tuple[int, ...]
    measured: float
    message: str


def validate_scene(
    scene: Scene,
    params: SceneParams = SceneParams(),
) -> list[Violation]:
    """Empty list iff every scene invariant holds."""
    tol = 1e-6
    out: list[Violation] = []
    half_road = scene.course.road_half_width_m
    for b in scene.buildings:
        for axis, (lo, hi) in enumerate(zip(params.building_min_m, params.building_max_m)):
            v = b.size_m[axis]
            if not (lo - tol <= v <= hi + tol):
                out.append(
                    Violation(
                        "size_range", (b.id,), v,
                        f"building {b.id} size axis {axis} = {v:.3f} outside "
                        f"[{lo}, {hi}]",
                    )
                )
        if not (params.setback_range_m[0] - tol <= b.setback_m <= params.setback_range_m[1] + tol):
            out.append(
                Violation(
                    "setback_range", (b.id,), b.setback_m,
                    f"building {b.id} setback {b.setback_m:.3f} outside "
                    f"{params.setback_range_m}",
                )
            )
        if not (0 <= b.color_index < params.color_count):
            out.append(
                Violation(
                    "color_index", (b.id,), float(b.color_index),
                    f"building {b.id} color {b.color_index} >= {params.color_count}",
                )
            )
        if b.s_m < params.start_offset_m - tol:
            out.append(
                Violation(
                    "start_offset", (b.id,), b.s_m,
                    f"building {b.id} center s {b.s_m:.2f} before the "
                    f"{params.start_offset_m:.0f} m start offset",
                )
            )
        for corner in building_footprint(scene, b):
            pose = project_to_path(scene.course, (corner[0], corner[1], 0.0), s_hint=b.s_m)
            lat_center = pose.lateral_m - scene.course.lane1_offset_m
            if abs(lat_center) < half_road - tol:
                out.append(
                    Violation(
                        "roadway_overlap", (b.id,), abs(lat_center),
                        f"building {b.id} corner is {abs(lat_center):.2f} m from "
                        f"the centerline, inside the {half_road:.2f} m roadway",
                    )
                )
                break
    for side in (LEFT, RIGHT):
        row = [b for b in scene.buildings if b.side == side]
        row.sort(key=lambda b: b.s_m)
        for a, b in zip(row, row[1:]):
            gap = (b.s_m - 0.5 * b.size_m[0]) - (a.s_m + 0.5 * a.size_m[0])
            if not (params.gap_range_m[0] - tol <= gap <= params.gap_range_m[1] + tol):
                out.append(
                    Violation(
                        "gap_range", (a.id, b.id), gap,
                        f"gap {gap:.3f} m between buildings {a.id} and {b.id} "
                        f"outside {params.gap_range_m}",
                    )
                )
    return out


# -- scenario document -------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    seed: int
    course_params: CourseParams
    scene_params: SceneParams
    scene: Scene


def build_scenario(
    seed: int,
    course_params: CourseParams = CourseParams(),
    scene_params: SceneParams = SceneParams(),
) -> Scenario:
    course = generate_course(seed, course_params)
    scene = generate_scene(seed, course, scene_params)
    return Scenario(seed, course_params, scene_params, scene)


def scenario_to_doc(sc: Scenario) -> dict:
    return {
        "version": SCENARIO_VERSION,
        "seed": sc.seed,
        "course_params": {
            "lane_width_m": sc.course_params.lane_width_m,
            "lane_count": sc.course_params.lane_count,
            "total_length_m": sc.course_params.total_length_m,
            "segment_length_range_m": list(sc.course_params.segment_length_range_m),
            "max_curvature_per_m": sc.course_params.max_curvature_per_m,
            "straight_fraction": sc.course_params.straight_fraction,
        },
        "scene_params": {
            "building_min_m": list(sc.scene_params.building_min_m),
            "building_max_m": list(sc.scene_params.building_max_m),
            "setback_range_m": list(sc.scene_params.setback_range_m),
            "gap_range_m": list(sc.scene_params.gap_range_m),
            "color_count": sc.scene_params.color_count,
            "start_offset_m": sc.scene_params.start_offset_m,
        },
        "segments": [[list(p) for p in seg] for seg in sc.scene.course.segments],
        "buildings": [
            {
                "id": b.id,
                "s_m": b.s_m,
                "side": b.side,
                "setback_m": b.setback_m,
                "size_m": list(b.size_m),
                "color_index": b.color_index,
                "center_world": list(b.center_world),
            }
            for b in sc.scene.buildings
        ],
    }


def scenario_to_json(sc: Scenario) -> str:
    """Canonical serialization: sorted keys, shortest round-trip floats."""
    return json.dumps(scenario_to_doc(sc), sort_keys=True, separators=(",", ":"))


def scenario_from_doc(doc: dict) -> Scenario:
    if doc.get("version") != SCENARIO_VERSION:
        raise ParamError(f"unsupported scenario version {doc.get('version')!r}")
    cp = doc["course_params"]
    course_params = CourseParams(
        lane_width_m=cp["lane_width_m"],
        lane_count=cp["lane_count"],
        total_length_m=cp["total_length_m"],
        segment_length_range_m=tuple(cp["segment_length_range_m"]),
        max_curvature_per_m=cp["max_curvature_per_m"],
        straight_fraction=cp["straight_fraction"],
    )
    sp = doc["scene_params"]
    scene_params = SceneParams(
        building_min_m=tuple(sp["building_min_m"]),
        building_max_m=tuple(sp["building_max_m"]),
        setback_range_m=tuple(sp["setback_range_m"]),
        gap_range_m=tuple(sp["gap_range_m"]),
        color_count=sp["color_count"],
        start_offset_m=sp["start_offset_m"],
    )
    segments = tuple(
        tuple((float(p[0]), float(p[1])) for p in seg) for seg in doc["segments"]
    )
    course = make_course(segments, course_params.lane_width_m, course_params.lane_count)
    buildings = tuple(
        Building(
            id=b["id"],
            s_m=b["s_m"],
            side=b["side"],
            setback_m=b["setback_m"],
            size_m=tuple(b["size_m"]),
            color_index=b["color_index"],
            center_world=tuple(b["center_world"]),
        )
        for b in doc["buildings"]
    )
    return Scenario(
        seed=doc["seed"],
        course_params=course_params,
        scene_params=scene_params,
        scene=Scene(course=course, buildings=buildings),
    )


def scenario_from_json(text: str) -> Scenario:
    return scenario_from_doc(json.loads(text))
