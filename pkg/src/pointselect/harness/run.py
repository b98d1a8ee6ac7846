"""Headless session execution and bit-exact log replay."""

from __future__ import annotations

from dataclasses import dataclass

from ..events import BUTTON, HAND, STATE, EventLog, LogFormatError, encode_event, hash_records
from ..rng import Stream
from ..vehicle import Controls
from .agents import DriverAgent, PointerAgent
from .config import C2, SessionConfig
from .engine import Engine


def run_session(config: SessionConfig) -> EventLog:
    """As-fast-as-possible run with synthetic agents; same config, same hash."""
    engine = Engine(config)
    driver = DriverAgent(config.driver, config.speed, config.vehicle.wheelbase_m)
    pointer = None
    if config.condition == C2:
        pointer = PointerAgent(
            config.pointer, Stream(config.seed, "pointer-noise"), config.tick_rate_hz
        )
    for _ in range(config.duration_ticks):
        if pointer is not None:
            for action in pointer.step(
                engine.tick, engine.task, engine.selection, engine.scene, engine.vehicle
            ):
                if action.kind == "hand":
                    engine.apply_hand(action.hand.tip, action.hand.joint3)
                else:
                    engine.apply_button(action.button)
        controls = driver.step(engine.scene.course, engine.pose, engine.vehicle)
        engine.step(controls)
    return engine.finalize()


@dataclass(frozen=True)
class ReplayResult:
    verified: bool
    expected_hash: str
    actual_hash: str
    first_divergent_tick: int | None = None
    first_divergent_record: int | None = None
    message: str = ""


def replay(log: EventLog) -> ReplayResult:
    """Re-simulate from the header, feeding the recorded external inputs.

    Hand samples and button presses replay at their recorded ticks; the
    controls applied during step k ride in the state record of tick k+1.
    Everything else (states, alarms, outcomes, assignments) is recomputed
    and must reproduce the stored hash bit for bit.
    """
    config = SessionConfig.from_doc(log.header["config"])
    engine = Engine(config)
    inputs: dict[int, list] = {}
    controls: dict[int, dict] = {}
    last_state_tick = 0
    for r in log.records:
        if r.kind == HAND:
            inputs.setdefault(r.tick, []).append(("hand", r.payload))
        elif r.kind == BUTTON:
            inputs.setdefault(r.tick, []).append(("button", r.payload))
        elif r.kind == STATE:
            controls[r.tick] = r.payload["controls"]
            last_state_tick = max(last_state_tick, r.tick)

    for tick in range(last_state_tick):
        for kind, payload in inputs.get(tick, []):
            if kind == "hand":
                engine.apply_hand(tuple(payload["tip"]), tuple(payload["joint3"]))
            else:
                engine.apply_button(payload["id"])
        c = controls.get(tick + 1)
        if c is None:
            raise LogFormatError(f"missing state record for tick {tick + 1}")
        engine.step(Controls(steer_rad=c["steer"], accel_mps2=c["accel"]))

    replayed = engine.finalize()
    stored_lines = [encode_event(r) for r in log.records]
    new_lines = replayed.encoded_records()
    stored_hash = log.final_hash or hash_records(stored_lines)
    if new_lines == stored_lines:
        if replayed.final_hash == stored_hash:
            return ReplayResult(True, stored_hash, replayed.final_hash, message="verified")
        return ReplayResult(
            False,
            stored_hash,
            replayed.final_hash,
            message="records replay identically but the stored hash is wrong "
            "(footer tampered)",
        )

    div_idx = None
    for i, (a, b) in enumerate(zip(stored_lines, new_lines)):
        if a != b:
            div_idx = i
            break
    if div_idx is None:
        div_idx = min(len(stored_lines), len(new_lines))
    div_tick = (
        log.records[div_idx].tick
        if div_idx < len(log.records)
        else (replayed.records[div_idx].tick if div_idx < len(replayed.records) else None)
    )
    return ReplayResult(
        False,
        stored_hash,
        replayed.final_hash,
        first_divergent_tick=div_tick,
        first_divergent_record=div_idx,
        message=f"divergence at record {div_idx} (tick {div_tick})",
    )
