"""Session configuration: scenario reference, policy, agents, condition."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..pointing import Calibration, ResolveParams
from ..vehicle import TICK_RATE_HZ, SpeedPolicy, VehicleParams
from ..world import CourseParams, SceneParams, scenario_from_json

CONFIG_VERSION = 1

C1 = "c1"  # driving only
C2 = "c2"  # driving with the input task


@dataclass(frozen=True)
class DriverParams:
    lookahead_gain_s: float = 0.45
    lookahead_min_m: float = 4.0
    lookahead_max_m: float = 12.0
    speed_kp: float = 0.8


@dataclass(frozen=True)
class PointerParams:
    noise_deg: float = 0.0
    reaction_s: float = 0.5
    confirm_s: float = 0.3


@dataclass(frozen=True)
class SessionConfig:
    seed: int = 0
    scenario_seed: int | None = None  # defaults to `seed`
    course_params: CourseParams = CourseParams()
    scene_params: SceneParams = SceneParams()
    speed: SpeedPolicy = SpeedPolicy(target_kmh=50.0)
    duration_s: float = 300.0
    tick_rate_hz: int = TICK_RATE_HZ
    condition: str = C2
    driver: DriverParams = DriverParams()
    pointer: PointerParams = PointerParams()
    vehicle: VehicleParams = VehicleParams()
    calibration: Calibration = Calibration()
    resolve: ResolveParams = ResolveParams()

    def validate(self) -> None:
        if self.duration_s <= 0:
            raise ValueError("duration_s must be > 0")
        if self.tick_rate_hz != TICK_RATE_HZ:
            raise ValueError(f"tick_rate_hz is fixed at {TICK_RATE_HZ}")
        if self.condition not in (C1, C2):
            raise ValueError(f"condition must be {C1!r} or {C2!r}")
        self.course_params.validate()
        self.scene_params.validate()
        self.speed.validate()
        self.vehicle.validate()
        self.calibration.validate()
        self.resolve.validate()

    @property
    def effective_scenario_seed(self) -> int:
        return self.seed if self.scenario_seed is None else self.scenario_seed

    @property
    def dt(self) -> float:
        return 1.0 / self.tick_rate_hz

    @property
    def duration_ticks(self) -> int:
        return int(round(self.duration_s * self.tick_rate_hz))

    def to_doc(self) -> dict:
        return {
            "version": CONFIG_VERSION,
            "seed": self.seed,
            "scenario": {
                "seed": self.effective_scenario_seed,
                "course_params": {
                    "lane_width_m": self.course_params.lane_width_m,
                    "lane_count": self.course_params.lane_count,
                    "total_length_m": self.course_params.total_length_m,
                    "segment_length_range_m": list(self.course_params.segment_length_range_m),
                    "max_curvature_per_m": self.course_params.max_curvature_per_m,
                    "straight_fraction": self.course_params.straight_fraction,
                },
                "scene_params": {
                    "building_min_m": list(self.scene_params.building_min_m),
                    "building_max_m": list(self.scene_params.building_max_m),
                    "setback_range_m": list(self.scene_params.setback_range_m),
                    "gap_range_m": list(self.scene_params.gap_range_m),
                    "color_count": self.scene_params.color_count,
                    "start_offset_m": self.scene_params.start_offset_m,
                },
            },
            "speed": {
                "target_kmh": self.speed.target_kmh,
                "tolerance_kmh": self.speed.tolerance_kmh,
            },
            "duration_s": self.duration_s,
            "tick_rate_hz": self.tick_rate_hz,
            "condition": self.condition,
            "driver": {
                "lookahead_gain_s": self.driver.lookahead_gain_s,
                "lookahead_min_m": self.driver.lookahead_min_m,
                "lookahead_max_m": self.driver.lookahead_max_m,
                "speed_kp": self.driver.speed_kp,
            },
            "pointer": {
                "noise_deg": self.pointer.noise_deg,
                "reaction_s": self.pointer.reaction_s,
                "confirm_s": self.pointer.confirm_s,
            },
            "vehicle": {
                "width_m": self.vehicle.width_m,
                "wheelbase_m": self.vehicle.wheelbase_m,
                "max_steer_rad": self.vehicle.max_steer_rad,
                "accel_range_mps2": list(self.vehicle.accel_range_mps2),
                "max_speed_mps": self.vehicle.max_speed_mps,
            },
            "calibration": {
                "yaw_gain": self.calibration.yaw_gain,
                "yaw_offset_rad": self.calibration.yaw_offset_rad,
                "pitch_gain": self.calibration.pitch_gain,
                "pitch_offset_rad": self.calibration.pitch_offset_rad,
            },
            "resolve": {
                "range_m": self.resolve.range_m,
                "max_angle_rad": self.resolve.max_angle_rad,
                "forward_only": self.resolve.forward_only,
            },
        }

    @staticmethod
    def from_doc(doc: dict) -> "SessionConfig":
        if doc.get("version") != CONFIG_VERSION:
            raise ValueError(f"unsupported config version {doc.get('version')!r}")
        sc = doc["scenario"]
        cp = sc["course_params"]
        sp = sc["scene_params"]
        cfg = SessionConfig(
            seed=doc["seed"],
            scenario_seed=sc["seed"],
            course_params=CourseParams(
                lane_width_m=cp["lane_width_m"],
                lane_count=cp["lane_count"],
                total_length_m=cp["total_length_m"],
                segment_length_range_m=tuple(cp["segment_length_range_m"]),
                max_curvature_per_m=cp["max_curvature_per_m"],
                straight_fraction=cp["straight_fraction"],
            ),
            scene_params=SceneParams(
                building_min_m=tuple(sp["building_min_m"]),
                building_max_m=tuple(sp["building_max_m"]),
                setback_range_m=tuple(sp["setback_range_m"]),
                gap_range_m=tuple(sp["gap_range_m"]),
                color_count=sp["color_count"],
                start_offset_m=sp["start_offset_m"],
            ),
            speed=SpeedPolicy(
                target_kmh=doc["speed"]["target_kmh"],
                tolerance_kmh=doc["speed"]["tolerance_kmh"],
            ),
            duration_s=doc["duration_s"],
            tick_rate_hz=doc["tick_rate_hz"],
            condition=doc["condition"],
            driver=DriverParams(**doc["driver"]),
            pointer=PointerParams(**doc["pointer"]),
            vehicle=VehicleParams(
                width_m=doc["vehicle"]["width_m"],
                wheelbase_m=doc["vehicle"]["wheelbase_m"],
                max_steer_rad=doc["vehicle"]["max_steer_rad"],
                accel_range_mps2=tuple(doc["vehicle"]["accel_range_mps2"]),
                max_speed_mps=doc["vehicle"]["max_speed_mps"],
            ),
            calibration=Calibration(**doc["calibration"]),
            resolve=ResolveParams(**doc["resolve"]),
        )
        cfg.validate()
        return cfg

    def to_json(self) -> str:
        return json.dumps(self.to_doc(), sort_keys=True, separators=(",", ":"))


def load_config_file(path: str | Path) -> SessionConfig:
    """Read a config file; a `scenario.file` reference is resolved in place.

    Scenario files supply only (seed, params); the scene itself regenerates
    deterministically, so logs stay self-contained.
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    scenario = doc.get("scenario", {})
    if "file" in scenario:
        ref = Path(scenario["file"])
        if not ref.is_absolute():
            ref = Path(path).parent / ref
        sc = scenario_from_json(ref.read_text(encoding="utf-8"))
        doc = dict(doc)
        doc["scenario"] = {
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
        }
    return SessionConfig.from_doc(doc)
