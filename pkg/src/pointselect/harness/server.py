"""Live session server: one authoritative simulation per connection.

Messages are JSON text frames over WebSocket.  Inbound inputs (controls,
hand samples, buttons) are queued and applied at the next tick boundary in
arrival order; a message may carry an explicit `tick` to schedule itself
at a later boundary, which is how scripted clients reproduce headless runs
exactly.  Controls are sticky between messages.

Two pacing modes per connection, chosen by an optional first message
{"type": "mode", "mode": "stepped"}:

* realtime (default): a wall-clock pacer advances the simulation at the
  fixed tick rate and broadcasts frames at half rate (30 Hz);
* stepped: the client advances the clock explicitly with
  {"type": "sync", "tick": T}; the reply frame acknowledges T.

Either way the session produces the same event-log format as headless
runs, so human sessions replay and report identically.
"""

from __future__ import annotations

import asyncio
import itertools
import json
import time
from pathlib import Path

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from ..events import STATE, EventLog, write_log
from ..session import BUTTONS
from ..vehicle import Controls
from ..world import Scene, left_normal, path_point
from .config import SessionConfig
from .engine import AbortedSessionError, Engine

PROTOCOL_VERSION = 1
FRAME_EVERY_TICKS = 2  # 30 Hz at the 60 Hz simulation rate
ROAD_SAMPLE_STEP_M = 2.0


def scene_render_payload(scene: Scene) -> dict:
    """Static geometry for clients: road polylines and building quads."""
    course = scene.course
    half = course.road_half_width_m
    n = int(course.total_length_m / ROAD_SAMPLE_STEP_M)
    center, left_edge, right_edge = [], [], []
    for i in range(n + 1):
        s = min(i * ROAD_SAMPLE_STEP_M, course.total_length_m)
        (x, y, _), tang = path_point(course, s)
        nx, ny, _ = left_normal(tang)
        center.append([round(x, 2), round(y, 2)])
        left_edge.append([round(x + nx * half, 2), round(y + ny * half, 2)])
        right_edge.append([round(x - nx * half, 2), round(y - ny * half, 2)])
    from ..world import building_footprint

    buildings = []
    for b in scene.buildings:
        corners = [[round(cx, 2), round(cy, 2)] for cx, cy in building_footprint(scene, b)]
        buildings.append(
            {
                "id": b.id,
                "s_m": b.s_m,
                "side": b.side,
                "height_m": b.size_m[2],
                "color_index": b.color_index,
                "center": list(b.center_world),
                "corners": corners,
            }
        )
    return {
        "road": {
            "step_m": ROAD_SAMPLE_STEP_M,
            "half_width_m": half,
            "center": center,
            "left_edge": left_edge,
            "right_edge": right_edge,
        },
        "buildings": buildings,
        "total_length_m": course.total_length_m,
    }


class LiveSession:
    """Engine plus per-connection input queue and framing."""

    def __init__(self, config: SessionConfig, log_path: Path):
        self.engine = Engine(config)
        self.config = config
        self.log_path = log_path
        self.sticky_controls = Controls(steer_rad=0.0, accel_mps2=0.0)
        self.pending: list[tuple[int, int, dict]] = []  # (apply_tick, seq, message)
        self._seq = itertools.count()
        self.finished = False

    def queue(self, msg: dict) -> None:
        apply_tick = msg.get("tick", self.engine.tick)
        if not isinstance(apply_tick, int) or apply_tick < self.engine.tick:
            raise ValueError(
                f"stale tick tag {apply_tick}; next boundary is {self.engine.tick}"
            )
        self.pending.append((apply_tick, next(self._seq), msg))

    def _apply_due(self) -> None:
        now = self.engine.tick
        due = [p for p in self.pending if p[0] <= now]
        if not due:
            return
        due.sort(key=lambda p: (p[0], p[1]))
        self.pending = [p for p in self.pending if p[0] > now]
        for _, _, msg in due:
            kind = msg["type"]
            if kind == "control":
                self.sticky_controls = Controls(
                    steer_rad=float(msg["steer"]), accel_mps2=float(msg["accel"])
                )
            elif kind == "hand":
                self.engine.apply_hand(tuple(msg["tip"]), tuple(msg["joint3"]))
            elif kind == "button":
                self.engine.apply_button(msg["id"])

    def step_tick(self) -> list:
        """Advance one tick; returns the records emitted by it."""
        before = len(self.engine.records)
        self._apply_due()
        self.engine.step(self.sticky_controls)
        return self.engine.records[before:]

    def frame(self) -> dict:
        e = self.engine
        sel = e.selection
        return {
            "type": "frame",
            "tick": e.tick,
            "t": e.tick * e.dt,
            "vehicle": {
                "position": list(e.vehicle.position),
                "heading": e.vehicle.heading_rad,
                "speed_mps": e.vehicle.speed_mps,
                "s": e.pose.s_m,
                "lateral": e.pose.lateral_m,
            },
            "alarm": e.alarm,
            "target": e.task.target_id,
            "selection": {
                "phase": sel.phase,
                "candidate": sel.candidate_id,
                "view_s": sel.view_s_m,
                "snapshot_ids": list(sel.snapshot.visible_ids) if sel.snapshot else [],
                "s_capture": sel.snapshot.s_capture_m if sel.snapshot else None,
            },
            "counts": {
                "success": e.task.counts.success,
                "wrong": e.task.counts.wrong,
                "missed": e.task.counts.missed,
            },
        }

    def finalize(self) -> EventLog:
        self.finished = True
        log = self.engine.finalize()
        write_log(log, self.log_path)
        return log


def _error_frame(message: str, fatal: bool = False) -> str:
    return json.dumps({"type": "error", "message": message, "fatal": fatal})


async def _send_records(websocket, records) -> None:
    for r in records:
        if r.kind == STATE:
            continue  # frames carry the vehicle state
        await websocket.send(
            json.dumps(
                {
                    "type": "event",
                    "record": {"tick": r.tick, "t": r.t_s, "kind": r.kind, "payload": r.payload},
                }
            )
        )


async def _finish(websocket, session: LiveSession) -> None:
    log = session.finalize()
    await websocket.send(
        json.dumps(
            {
                "type": "end",
                "hash": log.final_hash,
                "records": len(log.records),
                "log_path": str(session.log_path),
            }
        )
    )


class SessionServer:
    def __init__(self, config: SessionConfig, log_dir: Path):
        self.config = config
        self.log_dir = Path(log_dir)
        self._session_counter = itertools.count(1)

    async def handle(self, websocket) -> None:
        n = next(self._session_counter)
        log_path = self.log_dir / f"session-{n:04d}.jsonl"
        session = LiveSession(self.config, log_path)
        await websocket.send(
            json.dumps(
                {
                    "type": "hello",
                    "version": PROTOCOL_VERSION,
                    "config": self.config.to_doc(),
                    "tick_rate_hz": self.config.tick_rate_hz,
                    "duration_ticks": self.config.duration_ticks,
                    "scenario": scene_render_payload(session.engine.scene),
                }
            )
        )
        try:
            first = await websocket.recv()
        except ConnectionClosed:
            session.finalize()
            return
        stepped = False
        first_msg: dict | None = None
        try:
            doc = json.loads(first)
            if isinstance(doc, dict) and doc.get("type") == "mode":
                stepped = doc.get("mode") == "stepped"
            else:
                first_msg = doc
        except json.JSONDecodeError:
            await websocket.send(_error_frame("malformed JSON"))
        try:
            if stepped:
                await self._run_stepped(websocket, session)
            else:
                await self._run_realtime(websocket, session, first_msg)
        except ConnectionClosed:
            pass
        except AbortedSessionError as e:
            try:
                await websocket.send(_error_frame(f"session aborted: {e}", fatal=True))
            except ConnectionClosed:
                pass
        finally:
            if not session.finished:
                session.finalize()

    async def _run_stepped(self, websocket, session: LiveSession) -> None:
        limit = self.config.duration_ticks
        async for raw in websocket:
            try:
                msg = json.loads(raw)
                if not isinstance(msg, dict) or "type" not in msg:
                    raise ValueError("message must be an object with a 'type'")
            except (json.JSONDecodeError, ValueError) as e:
                await websocket.send(_error_frame(f"malformed message: {e}"))
                continue
            kind = msg["type"]
            try:
                if kind in ("control", "hand", "button"):
                    session.queue(msg)
                elif kind == "sync":
                    target = min(int(msg["tick"]), limit)
                    while session.engine.tick < target:
                        records = session.step_tick()
                        await _send_records(websocket, records)
                    await websocket.send(json.dumps(session.frame()))
                    if session.engine.tick >= limit:
                        await _finish(websocket, session)
                        return
                elif kind == "end":
                    await _finish(websocket, session)
                    return
                else:
                    await websocket.send(_error_frame(f"unknown message type {kind!r}"))
            except (KeyError, TypeError, ValueError) as e:
                await websocket.send(_error_frame(f"bad {kind} message: {e}"))

    async def _run_realtime(
        self, websocket, session: LiveSession, first_msg: dict | None
    ) -> None:
        inbox: asyncio.Queue = asyncio.Queue()
        if first_msg is not None:
            inbox.put_nowait(first_msg)

        async def reader():
            try:
                async for raw in websocket:
                    try:
                        msg = json.loads(raw)
                        if not isinstance(msg, dict) or "type" not in msg:
                            raise ValueError("message must be an object with a 'type'")
                        inbox.put_nowait(msg)
                    except (json.JSONDecodeError, ValueError) as e:
                        await websocket.send(_error_frame(f"malformed message: {e}"))
            except ConnectionClosed:
                pass
            inbox.put_nowait({"type": "_closed"})

        reader_task = asyncio.create_task(reader())
        dt = session.engine.dt
        limit = self.config.duration_ticks
        next_tick_at = time.monotonic() + dt
        try:
            while session.engine.tick < limit:
                timeout = max(0.0, next_tick_at - time.monotonic())
                try:
                    msg = await asyncio.wait_for(inbox.get(), timeout=timeout)
                    kind = msg["type"]
                    if kind == "_closed":
                        return
                    if kind == "end":
                        await _finish(websocket, session)
                        return
                    if kind in ("control", "hand", "button"):
                        try:
                            session.queue(msg)
                        except (KeyError, TypeError, ValueError) as e:
                            await websocket.send(_error_frame(f"bad {kind} message: {e}"))
                    elif kind == "sync":
                        await websocket.send(
                            _error_frame("sync is only valid in stepped mode", fatal=True)
                        )
                        return
                    else:
                        await websocket.send(_error_frame(f"unknown message type {kind!r}"))
                    continue
                except asyncio.TimeoutError:
                    pass
                records = session.step_tick()
                await _send_records(websocket, records)
                if session.engine.tick % FRAME_EVERY_TICKS == 0:
                    await websocket.send(json.dumps(session.frame()))
                next_tick_at += dt
                behind = time.monotonic() - next_tick_at
                if behind > 1.0:  # fell far behind; drop lost time, keep cadence
                    next_tick_at = time.monotonic() + dt
            await _finish(websocket, session)
        finally:
            reader_task.cancel()


async def serve_async(config: SessionConfig, host: str, port: int, log_dir: Path):
    server = SessionServer(config, log_dir)
    return await ws_serve(server.handle, host, port)


def serve_forever(
    config: SessionConfig, host: str = "127.0.0.1", port: int = 8765, log_dir: Path = Path(".")
) -> None:
    async def _main():
        async with await serve_async(config, host, port, log_dir):
            print(f"serving live sessions on ws://{host}:{port} (logs in {log_dir})")
            await asyncio.Future()

    asyncio.run(_main())
