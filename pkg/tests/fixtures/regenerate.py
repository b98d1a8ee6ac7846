"""Regenerate the committed fixture log (run from the repo root).

The fixture pins engine behavior: any semantic change to the simulation
must regenerate it and update FIXTURE_HASH in tests/test_acceptance.py.
"""

from pathlib import Path

from pointselect.events import write_log
from pointselect.harness import PointerParams, SessionConfig, run_session
from pointselect.vehicle import SpeedPolicy
from pointselect.world import CourseParams

FIXTURE_CONFIG = SessionConfig(
    seed=123,
    duration_s=20.0,
    course_params=CourseParams(total_length_m=1500.0),
    speed=SpeedPolicy(target_kmh=50.0),
    pointer=PointerParams(noise_deg=2.0),
)


def main() -> None:
    log = run_session(FIXTURE_CONFIG)
    out = Path(__file__).parent / "fixture_log.jsonl"
    write_log(log, out)
    print(f"wrote {out} ({len(log.records)} records, hash {log.final_hash})")


if __name__ == "__main__":
    main()
