import dataclasses
import json

import pytest

from pointselect.events import BUTTON, STATE, TARGET_ASSIGNED, read_log, write_log
from pointselect.harness import (
    AbortedSessionError,
    C1,
    C2,
    Engine,
    PointerParams,
    SessionConfig,
    replay,
    run_session,
)
from pointselect.harness.cli import main as cli_main
from pointselect.metrics import build_report
from pointselect.vehicle import Controls, SpeedPolicy
from pointselect.world import CourseParams

FAST = dict(
    duration_s=30.0,
    course_params=CourseParams(total_length_m=1500.0),
    speed=SpeedPolicy(target_kmh=50.0),
)


def fast_config(**over):
    merged = {**FAST, **over}
    return SessionConfig(**merged)


class TestRunSession:
    def test_same_config_same_hash(self):
        cfg = fast_config(seed=5)
        assert run_session(cfg).final_hash == run_session(cfg).final_hash

    def test_different_seed_different_hash(self):
        assert (
            run_session(fast_config(seed=5)).final_hash
            != run_session(fast_config(seed=6)).final_hash
        )

    def test_driving_only_assigns_no_targets(self):
        log = run_session(fast_config(seed=5, condition=C1))
        assert not [r for r in log.records if r.kind == TARGET_ASSIGNED]
        assert not [r for r in log.records if r.kind == BUTTON]

    def test_config_round_trips_through_header(self):
        cfg = fast_config(seed=5, pointer=PointerParams(noise_deg=2.0))
        log = run_session(cfg)
        back = SessionConfig.from_doc(log.header["config"])
        assert back.to_doc() == cfg.to_doc()

    def test_targets_flow_in_c2(self):
        log = run_session(fast_config(seed=5))
        assigns = [r for r in log.records if r.kind == TARGET_ASSIGNED]
        assert len(assigns) >= 3
        rep = build_report(log)
        assert rep.sr_percent == 100.0

    def test_log_passes_integrity_checks(self):
        from pointselect.events import check_integrity

        check_integrity(run_session(fast_config(seed=8)))


class TestReplay:
    def test_untouched_log_verifies(self):
        log = run_session(fast_config(seed=9))
        result = replay(log)
        assert result.verified
        assert result.actual_hash == log.final_hash

    def test_flipped_button_detected_at_tick(self):
        log = run_session(fast_config(seed=9, pointer=PointerParams(noise_deg=3.0)))
        idx, flipped = next(
            (i, r)
            for i, r in enumerate(log.records)
            if r.kind == BUTTON and r.payload["id"] == "confirm"
        )
        log.records[idx] = dataclasses.replace(flipped, payload={"id": "up"})
        result = replay(log)
        assert not result.verified
        assert result.first_divergent_tick is not None
        # divergence is at or after the mutated press, never before
        assert result.first_divergent_tick >= flipped.tick

    def test_single_bit_payload_mutation_detected(self):
        log = run_session(fast_config(seed=9))
        idx, rec = next((i, r) for i, r in enumerate(log.records) if r.kind == STATE)
        mutated = dict(rec.payload)
        mutated["speed_mps"] = mutated["speed_mps"] + 1e-9
        log.records[idx] = dataclasses.replace(rec, payload=mutated)
        result = replay(log)
        assert not result.verified
        assert result.first_divergent_record == idx

    def test_file_round_trip_replays(self, tmp_path):
        log = run_session(fast_config(seed=10))
        path = tmp_path / "log.jsonl"
        write_log(log, path)
        back = read_log(path)
        assert back.final_hash == log.final_hash
        assert replay(back).verified


class TestAbort:
    def test_hard_right_leaves_corridor(self):
        cfg = fast_config(seed=1, duration_s=600.0)
        engine = Engine(cfg)
        with pytest.raises(AbortedSessionError) as exc:
            for _ in range(60 * 600):
                engine.step(Controls(steer_rad=0.0, accel_mps2=3.0))
        # partial log is attached and structurally sound
        partial = exc.value.log
        assert partial.records
        from pointselect.events import check_integrity

        check_integrity(partial)


class TestCli:
    def test_run_replay_report_cycle(self, tmp_path, capsys):
        out = tmp_path / "log.jsonl"
        code = cli_main(
            [
                "run", "--seed", "4", "--speed", "50", "--duration", "20",
                "--out", str(out),
            ]
        )
        assert code == 0
        assert out.exists()
        assert cli_main(["replay", str(out), "--verify"]) == 0
        capsys.readouterr()
        assert cli_main(["report", str(out), "--format", "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["version"] == 1 and "llm_m" in doc

    def test_report_table_format(self, tmp_path, capsys):
        out = tmp_path / "log.jsonl"
        cli_main(["run", "--seed", "4", "--duration", "20", "--out", str(out)])
        assert cli_main(["report", str(out)]) == 0
        text = capsys.readouterr().out
        assert "success rate" in text

    def test_gen_scenario(self, tmp_path):
        out = tmp_path / "scenario.json"
        assert cli_main(["gen-scenario", "--seed", "3", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["version"] == 1 and doc["buildings"]

    def test_corrupted_log_fails_verification(self, tmp_path):
        out = tmp_path / "log.jsonl"
        cli_main(["run", "--seed", "4", "--duration", "20", "--out", str(out)])
        lines = out.read_text().splitlines()
        for i, line in enumerate(lines):
            if '"kind":"button"' in line and '"id":"confirm"' in line:
                lines[i] = line.replace('"id":"confirm"', '"id":"cancel"')
                break
        out.write_text("\n".join(lines) + "\n")
        assert cli_main(["replay", str(out), "--verify"]) == 1

    def test_missing_log_is_runtime_error(self, tmp_path):
        assert cli_main(["replay", str(tmp_path / "nope.jsonl")]) == 3

    def test_config_file_with_overrides(self, tmp_path):
        cfg = fast_config(seed=2, duration_s=10.0)
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps(cfg.to_doc()), encoding="utf-8")
        out = tmp_path / "log.jsonl"
        code = cli_main(
            ["run", "--config", str(cfg_path), "--noise-deg", "2.0", "--out", str(out)]
        )
        assert code == 0
        log = read_log(out)
        assert log.header["config"]["pointer"]["noise_deg"] == 2.0
        assert log.header["config"]["duration_s"] == 10.0
