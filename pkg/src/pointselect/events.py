"""Append-only event log: canonical JSONL encoding and stable hashing.

A log file is one header line, zero or more record lines, and one footer
line carrying the 64-bit FNV-1a hash of all record lines.  Records encode
canonically (sorted keys, compact separators, shortest round-trip floats),
so equal record sequences hash equal on every platform.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

LOG_VERSION = 1
HASH_ALGORITHM = "sha256-64/jsonl/v1"

STATE = "state"
HAND = "hand"
BUTTON = "button"
CANDIDATE_CHANGED = "candidate_changed"
CURSOR_MOVED = "cursor_moved"
VIEW_SHIFT = "view_shift"
TARGET_ASSIGNED = "target_assigned"
OUTCOME = "outcome"
ALARM_CHANGED = "alarm_changed"
ROUGH_MISS = "rough_miss"
IGNORED = "ignored"

KINDS = frozenset(
    {
        STATE,
        HAND,
        BUTTON,
        CANDIDATE_CHANGED,
        CURSOR_MOVED,
        VIEW_SHIFT,
        TARGET_ASSIGNED,
        OUTCOME,
        ALARM_CHANGED,
        ROUGH_MISS,
        IGNORED,
    }
)

class LogFormatError(ValueError):
    """Malformed log line or unsupported log version."""


class LogIntegrityError(ValueError):
    """Structurally valid log that violates ordering or reference rules."""


@dataclass(frozen=True)
class EventRecord:
    tick: int
    t_s: float
    kind: str
    payload: dict


def encode_event(record: EventRecord) -> str:
    return json.dumps(
        {"tick": record.tick, "t": record.t_s, "kind": record.kind, "payload": record.payload},
        sort_keys=True,
        separators=(",", ":"),
    )


def decode_event(line: str, line_number: int = 0) -> EventRecord:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as e:
        raise LogFormatError(f"line {line_number}: invalid JSON: {e}") from e
    if not isinstance(doc, dict) or set(doc) != {"tick", "t", "kind", "payload"}:
        raise LogFormatError(f"line {line_number}: not an event record")
    if doc["kind"] not in KINDS:
        raise LogFormatError(f"line {line_number}: unknown kind {doc['kind']!r}")
    if not isinstance(doc["tick"], int):
        raise LogFormatError(f"line {line_number}: tick must be an integer")
    return EventRecord(tick=doc["tick"], t_s=doc["t"], kind=doc["kind"], payload=doc["payload"])


def hash_records(lines: list[str]) -> str:
    """64-bit stable hash: first 8 bytes of SHA-256 over newline-joined lines."""
    h = hashlib.sha256()
    for line in lines:
        h.update(line.encode("utf-8"))
        h.update(b"\n")
    return h.digest()[:8].hex()


@dataclass
class EventLog:
    header: dict
    records: list[EventRecord] = field(default_factory=list)
    final_hash: str = ""

    def encoded_records(self) -> list[str]:
        return [encode_event(r) for r in self.records]

    def compute_hash(self) -> str:
        return hash_records(self.encoded_records())

    def finalize(self) -> "EventLog":
        self.final_hash = self.compute_hash()
        return self


def make_header(config_doc: dict) -> dict:
    return {
        "type": "header",
        "version": LOG_VERSION,
        "hash_algorithm": HASH_ALGORITHM,
        "config": config_doc,
    }


def write_log(log: EventLog, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        f.write(json.dumps(log.header, sort_keys=True, separators=(",", ":")) + "\n")
        for line in log.encoded_records():
            f.write(line + "\n")
        footer = {
            "type": "footer",
            "record_count": len(log.records),
            "final_hash": log.final_hash or log.compute_hash(),
        }
        f.write(json.dumps(footer, sort_keys=True, separators=(",", ":")) + "\n")


def read_log(path: str | Path) -> EventLog:
    path = Path(path)
    records: list[EventRecord] = []
    header: dict | None = None
    footer: dict | None = None
    with path.open("r", encoding="utf-8") as f:
        for i, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if header is None:
                try:
                    header = json.loads(line)
                except json.JSONDecodeError as e:
                    raise LogFormatError(f"line {i}: invalid header JSON: {e}") from e
                if not isinstance(header, dict) or header.get("type") != "header":
                    raise LogFormatError(f"line {i}: first line must be the header")
                if header.get("version") != LOG_VERSION:
                    raise LogFormatError(
                        f"unsupported log version {header.get('version')!r}"
                    )
                continue
            if line.startswith('{"kind":'):
                records.append(decode_event(line, i))
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as e:
                raise LogFormatError(f"line {i}: invalid JSON: {e}") from e
            if isinstance(doc, dict) and doc.get("type") == "footer":
                footer = doc
            else:
                records.append(decode_event(line, i))
    if header is None:
        raise LogFormatError("empty file: missing header")
    log = EventLog(header=header, records=records)
    log.final_hash = footer["final_hash"] if footer else log.compute_hash()
    return log


def check_integrity(log: EventLog) -> None:
    """Tick monotonicity, outcome/target reference pairing, hash match."""
    last_tick = -1
    assigned: set[int] = set()
    for i, r in enumerate(log.records):
        if r.tick < last_tick:
            raise LogIntegrityError(
                f"record {i}: tick {r.tick} decreases below {last_tick}"
            )
        last_tick = r.tick
        if r.kind == TARGET_ASSIGNED:
            assigned.add(r.payload["target_id"])
        elif r.kind == OUTCOME:
            if r.payload["target_id"] not in assigned:
                raise LogIntegrityError(
                    f"record {i}: outcome references unassigned target "
                    f"{r.payload['target_id']}"
                )
    if log.final_hash and log.final_hash != log.compute_hash():
        raise LogIntegrityError("final hash does not match record sequence")
