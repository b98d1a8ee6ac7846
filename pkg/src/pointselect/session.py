"""Two-phase selection state machine and the input-task controller.

Phase 1 (rough pointing): an activation press carries a hand sample; the
calibrated ray resolves to a candidate building and the front view is
snapshotted (as data: pose + visible ids, not pixels).

Phase 2 (fine selection): arrow buttons walk a cursor over the snapshot's
buildings -- up/down move along the road on the candidate's side,
left/right jump across the road.  Moving down past the viewpoint retraces
the driven path so already-passed buildings stay selectable.  Confirm
commits the candidate; cancel abandons the attempt.

The task controller assigns targets, classifies confirms as
success/wrong/missed with a five-second post-pass window, and schedules
reassignment delays.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace

from .pointing import (
    Calibration,
    HandSample,
    ResolveParams,
    angle_to_building,
    apply_calibration,
    build_original_ray,
    cabin_to_world,
    resolve_candidate,
)
from .rng import Stream
from .vehicle import VehicleState
from .world import LEFT, RIGHT, Building, PathPose, Scene, project_to_path

IDLE = "idle"
FINE_SELECT = "fine_select"

ACTIVATE = "activate"
UP = "up"
DOWN = "down"
LEFT_BTN = "left"
RIGHT_BTN = "right"
CONFIRM = "confirm"
CANCEL = "cancel"
BUTTONS = (ACTIVATE, UP, DOWN, LEFT_BTN, RIGHT_BTN, CONFIRM, CANCEL)
ARROWS = (UP, DOWN, LEFT_BTN, RIGHT_BTN)

BACK_WINDOW_M = 100.0
VIEW_DISTANCE_M = 150.0
EXPOSE_MARGIN_M = 10.0
MIN_LEAD_M = 20.0
CONFIRM_WINDOW_S = 5.0
REASSIGN_DELAY_RANGE_S = (3.0, 6.0)

SUCCESS = "success"
WRONG = "wrong"
MISSED = "missed"

# (kind, payload) pairs; the harness stamps ticks and writes the log.
Event = tuple[str, dict]


class NoAssignableTargetError(ValueError):
    """No building inside the assignment window ahead of the vehicle."""


@dataclass(frozen=True)
class Snapshot:
    s_capture_m: float
    vehicle_pose: PathPose
    visible_ids: tuple[int, ...]


@dataclass(frozen=True)
class SelectionState:
    phase: str = IDLE
    snapshot: Snapshot | None = None
    candidate_id: int | None = None
    view_s_m: float = 0.0
    activation_tick: int | None = None


@dataclass(frozen=True)
class OutcomeCounts:
    success: int = 0
    wrong: int = 0
    missed: int = 0

    @property
    def total(self) -> int:
        return self.success + self.wrong + self.missed


@dataclass(frozen=True)
class TaskState:
    target_id: int | None = None
    assigned_tick: int | None = None
    passed_tick: int | None = None
    pending_reassign_at: int | None = None
    first_activation_tick: int | None = None
    counts: OutcomeCounts = OutcomeCounts()


def visible_window_ids(scene: Scene, s_capture: float) -> tuple[int, ...]:
    lo = s_capture - BACK_WINDOW_M
    hi = s_capture + VIEW_DISTANCE_M
    ids = [b.id for b in scene.buildings if lo <= b.s_m <= hi]
    ids.sort(key=lambda i: (scene.buildings[i].s_m, i))
    return tuple(ids)


def _view_s_for(candidate: Building, s_capture: float) -> float:
    """Viewpoint exposing the candidate; never ahead of the capture point."""
    if candidate.s_m >= s_capture:
        return s_capture
    return max(0.0, candidate.s_m - EXPOSE_MARGIN_M)


def take_snapshot(scene: Scene, pose: PathPose) -> Snapshot:
    return Snapshot(
        s_capture_m=pose.s_m,
        vehicle_pose=pose,
        visible_ids=visible_window_ids(scene, pose.s_m),
    )


def begin_attempt(
    state: SelectionState,
    hand: HandSample,
    scene: Scene,
    vehicle: VehicleState,
    cal: Calibration,
    params: ResolveParams,
    tick: int,
    pose: PathPose | None = None,
) -> tuple[SelectionState, list[Event]]:
    """Rough pointing: build + calibrate the ray, resolve, snapshot on a hit."""
    if state.phase != IDLE:
        return state, [("ignored", {"button": ACTIVATE, "reason": "not_idle"})]
    if pose is None:
        pose = project_to_path(scene.course, vehicle.position)
    ray = apply_calibration(cal, build_original_ray(hand))
    world_ray = cabin_to_world(ray, vehicle.position, vehicle.heading_rad)
    candidate = resolve_candidate(world_ray, scene, pose, params)
    if candidate is None:
        return state, [("rough_miss", {})]
    building = scene.buildings[candidate]
    snapshot = take_snapshot(scene, pose)
    angle, _ = angle_to_building(world_ray, building)
    new = SelectionState(
        phase=FINE_SELECT,
        snapshot=snapshot,
        candidate_id=candidate,
        view_s_m=_view_s_for(building, snapshot.s_capture_m),
        activation_tick=tick,
    )
    return new, [("candidate_changed", {"candidate_id": candidate, "angle_rad": angle})]


def cursor_move_target(
    scene: Scene, snapshot: Snapshot, candidate_id: int, direction: str
) -> int | None:
    """Destination of an arrow move inside the snapshot window, or None."""
    cand = scene.buildings[candidate_id]
    visible = [scene.buildings[i] for i in snapshot.visible_ids]
    if direction == UP:
        ahead = [b for b in visible if b.side == cand.side and b.s_m > cand.s_m]
        return min(ahead, key=lambda b: (b.s_m, b.id)).id if ahead else None
    if direction == DOWN:
        behind = [b for b in visible if b.side == cand.side and b.s_m < cand.s_m]
        return max(behind, key=lambda b: (b.s_m, -b.id)).id if behind else None
    want = LEFT if direction == LEFT_BTN else RIGHT
    if cand.side == want:
        return None
    other = [b for b in visible if b.side == want]
    if not other:
        return None
    return min(other, key=lambda b: (abs(b.s_m - cand.s_m), b.id)).id


def move_cursor(
    state: SelectionState, direction: str, scene: Scene
) -> tuple[SelectionState, list[Event]]:
    assert state.phase == FINE_SELECT and state.snapshot and state.candidate_id is not None
    target = cursor_move_target(scene, state.snapshot, state.candidate_id, direction)
    if target is None:
        return state, [("ignored", {"button": direction, "reason": "cursor_blocked"})]
    events: list[Event] = [
        ("cursor_moved", {"direction": direction, "from_id": state.candidate_id, "to_id": target})
    ]
    new_view = _view_s_for(scene.buildings[target], state.snapshot.s_capture_m)
    if new_view != state.view_s_m:
        events.append(("view_shift", {"from_s": state.view_s_m, "to_s": new_view}))
    return replace(state, candidate_id=target, view_s_m=new_view), events


def press_button(
    state: SelectionState,
    button: str,
    scene: Scene,
    vehicle: VehicleState,
    cal: Calibration,
    params: ResolveParams,
    hand: HandSample | None,
    tick: int,
    pose: PathPose | None = None,
) -> tuple[SelectionState, list[Event]]:
    """Route one button press; invalid-phase presses degrade to ignored events.

    Confirm emits an internal ("_confirm", {candidate_id}) signal for the
    task controller; internal signals are not written to the log.
    """
    if button == ACTIVATE:
        if state.phase != IDLE:
            return state, [("ignored", {"button": button, "reason": "not_idle"})]
        if hand is None:
            return state, [("ignored", {"button": button, "reason": "no_hand_sample"})]
        return begin_attempt(state, hand, scene, vehicle, cal, params, tick, pose=pose)
    if button in ARROWS:
        if state.phase != FINE_SELECT:
            return state, [("ignored", {"button": button, "reason": "not_fine_select"})]
        return move_cursor(state, button, scene)
    if button == CONFIRM:
        if state.phase != FINE_SELECT:
            return state, [("ignored", {"button": button, "reason": "not_fine_select"})]
        return SelectionState(), [
            (
                "_confirm",
                {"candidate_id": state.candidate_id, "activation_tick": state.activation_tick},
            )
        ]
    if button == CANCEL:
        if state.phase != FINE_SELECT:
            return state, [("ignored", {"button": button, "reason": "not_fine_select"})]
        return SelectionState(), [("_cancel", {})]
    return state, [("ignored", {"button": button, "reason": "unknown_button"})]


def arrow_path(
    scene: Scene, snapshot: Snapshot, from_id: int, to_id: int
) -> list[str] | None:
    """Shortest arrow sequence between two snapshot buildings (BFS), or None."""
    if from_id == to_id:
        return []
    seen = {from_id: None}
    queue: deque[int] = deque([from_id])
    while queue:
        cur = queue.popleft()
        for direction in ARROWS:
            nxt = cursor_move_target(scene, snapshot, cur, direction)
            if nxt is None or nxt in seen:
                continue
            seen[nxt] = (cur, direction)
            if nxt == to_id:
                path: list[str] = []
                node = nxt
                while seen[node] is not None:
                    prev, d = seen[node]
                    path.append(d)
                    node = prev
                path.reverse()
                return path
            queue.append(nxt)
    return None


def target_passed(vehicle_pose: PathPose, target: Building) -> bool:
    """Strict: abeam of the building center does not count as passed."""
    return vehicle_pose.s_m > target.s_m


def assign_target(scene: Scene, vehicle_pose: PathPose, rng: Stream) -> int:
    """Uniform draw among buildings in (s+MIN_LEAD, s+VIEW_DISTANCE] ahead."""
    lo = vehicle_pose.s_m + MIN_LEAD_M
    hi = vehicle_pose.s_m + VIEW_DISTANCE_M
    eligible = [b.id for b in scene.buildings if lo < b.s_m <= hi]
    if not eligible:
        raise NoAssignableTargetError(
            f"no building in ({lo:.1f}, {hi:.1f}] m to assign"
        )
    return eligible[rng.randint(len(eligible))]


def tick_task(
    task: TaskState,
    events: list[tuple[str, dict, int]],
    vehicle_pose: PathPose,
    tick: int,
    scene: Scene,
    task_rng: Stream,
    reassign_rng: Stream,
    window_ticks: int,
    tick_rate_hz: int,
    may_assign: bool,
) -> tuple[TaskState, list[Event]]:
    """One task-controller update at the post-step tick.

    `events` are this tick's selection signals as (kind, payload,
    event_tick) triples; confirms are classified against the five-second
    window measured from the event's own tick.
    """
    out: list[Event] = []

    def reassign_delay_ticks() -> int:
        return int(round(reassign_rng.uniform(*REASSIGN_DELAY_RANGE_S) * tick_rate_hz))

    for kind, payload, event_tick in events:
        if kind == "activate_press":
            if task.target_id is not None and task.first_activation_tick is None:
                task = replace(task, first_activation_tick=event_tick)
        elif kind == "confirm":
            if task.target_id is None:
                out.append(
                    ("ignored", {"button": CONFIRM, "reason": "no_active_target"})
                )
                continue
            chosen = payload["candidate_id"]
            if chosen == task.target_id:
                in_window = (
                    task.passed_tick is None
                    or event_tick - task.passed_tick <= window_ticks
                )
                if not in_window:
                    # unreachable in the engine: a miss fires first
                    continue
                first_activation = task.first_activation_tick
                if first_activation is None:
                    # selection attempt began before this target was assigned
                    first_activation = payload.get("activation_tick")
                out.append(
                    (
                        "outcome",
                        {
                            "result": SUCCESS,
                            "target_id": task.target_id,
                            "confirm_tick": event_tick,
                            "first_activation_tick": first_activation,
                        },
                    )
                )
                task = replace(
                    task,
                    target_id=None,
                    assigned_tick=None,
                    passed_tick=None,
                    first_activation_tick=None,
                    pending_reassign_at=tick + reassign_delay_ticks(),
                    counts=replace(task.counts, success=task.counts.success + 1),
                )
            else:
                out.append(
                    (
                        "outcome",
                        {
                            "result": WRONG,
                            "target_id": task.target_id,
                            "chosen_id": chosen,
                            "confirm_tick": event_tick,
                        },
                    )
                )
                task = replace(
                    task, counts=replace(task.counts, wrong=task.counts.wrong + 1)
                )

    if task.target_id is not None and task.passed_tick is None:
        if target_passed(vehicle_pose, scene.buildings[task.target_id]):
            task = replace(task, passed_tick=tick)

    if (
        task.target_id is not None
        and task.passed_tick is not None
        and tick - task.passed_tick > window_ticks
    ):
        out.append(("outcome", {"result": MISSED, "target_id": task.target_id}))
        task = replace(
            task,
            target_id=None,
            assigned_tick=None,
            passed_tick=None,
            first_activation_tick=None,
            pending_reassign_at=tick + reassign_delay_ticks(),
            counts=replace(task.counts, missed=task.counts.missed + 1),
        )

    if (
        task.target_id is None
        and may_assign
        and (task.pending_reassign_at is None or task.pending_reassign_at <= tick)
    ):
        try:
            target = assign_target(scene, vehicle_pose, task_rng)
        except NoAssignableTargetError:
            target = None  # retry next tick
        if target is not None:
            b = scene.buildings[target]
            task = replace(
                task,
                target_id=target,
                assigned_tick=tick,
                passed_tick=None,
                first_activation_tick=None,
                pending_reassign_at=None,
            )
            out.append(
                ("target_assigned", {"target_id": target, "s_m": b.s_m, "side": b.side})
            )

    return task, out
