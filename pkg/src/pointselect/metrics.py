"""Quantitative measures over event logs.

Lane keeping (LLM) is the sample standard deviation of the lane-center
deviation, speed maintenance (SM) the sample SD of speed in km/h, both
over the measurement window that opens when the target speed band is
first attained.  Success rate and task completion times summarize the
input task; occupied width is vehicle width plus lateral deviation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .events import (
    BUTTON,
    OUTCOME,
    STATE,
    TARGET_ASSIGNED,
    EventLog,
    LogIntegrityError,
    check_integrity,
)
from .session import MISSED, SUCCESS, WRONG, OutcomeCounts
from .vehicle import IN_RANGE, SpeedPolicy, classify_speed

REPORT_VERSION = 1
MIN_SAMPLE_COUNT = 25


class InsufficientDataError(ValueError):
    """Fewer samples than the statistic requires."""


class UndefinedRateError(ValueError):
    """Success rate of zero attempts."""


class NoWindowError(ValueError):
    """The target speed band was never attained."""


@dataclass(frozen=True)
class MeasurementWindow:
    start_tick: int
    end_tick: int


@dataclass(frozen=True)
class MetricsReport:
    llm_m: float
    sm_kmh: float
    sr_percent: float | None
    tct_list_s: tuple[float, ...]
    tct_mean_s: float | None
    tct_sd_s: float | None
    counts: OutcomeCounts
    occupied_mean_m: float
    occupied_max_m: float
    sample_count: int
    flags: tuple[str, ...]


def sample_sd(values: list[float]) -> float:
    """Unbiased (n-1) sample SD; exact-summation two-pass."""
    n = len(values)
    if n < 2:
        raise InsufficientDataError(f"sample_sd needs >= 2 values, got {n}")
    if min(values) == max(values):
        return 0.0  # avoid mean-rounding residue on constant input
    mean = math.fsum(values) / n
    ss = math.fsum((v - mean) ** 2 for v in values)
    return math.sqrt(ss / (n - 1))


def success_rate(counts: OutcomeCounts) -> float:
    total = counts.total
    if total == 0:
        raise UndefinedRateError("success rate is undefined with zero attempts")
    return counts.success / total * 100.0


def occupied_width(deviation_m: float, vehicle_width_m: float) -> float:
    """Road width consumed by a vehicle weaving by `deviation_m`."""
    if deviation_m < 0 or vehicle_width_m < 0:
        raise ValueError("deviation and width must be >= 0")
    return vehicle_width_m + deviation_m


def _policy_from_log(log: EventLog) -> SpeedPolicy:
    speed = log.header["config"]["speed"]
    return SpeedPolicy(target_kmh=speed["target_kmh"], tolerance_kmh=speed["tolerance_kmh"])


def measurement_window(log: EventLog, policy: SpeedPolicy) -> MeasurementWindow:
    """From the first in-range state sample to the last one."""
    start = None
    end = None
    for r in log.records:
        if r.kind != STATE:
            continue
        end = r.tick
        if start is None:
            if classify_speed(r.payload["speed_mps"] * 3.6, policy) == IN_RANGE:
                start = r.tick
    if start is None or end is None:
        raise NoWindowError("speed never entered the target band")
    return MeasurementWindow(start_tick=start, end_tick=end)


def _window_states(log: EventLog, window: MeasurementWindow):
    for r in log.records:
        if r.kind == STATE and window.start_tick <= r.tick <= window.end_tick:
            yield r


def compute_llm(log: EventLog, window: MeasurementWindow) -> float:
    lateral = [r.payload["lateral"] for r in _window_states(log, window)]
    if not lateral:
        raise InsufficientDataError("no state samples in the measurement window")
    return sample_sd(lateral)


def compute_sm(log: EventLog, window: MeasurementWindow) -> float:
    speeds = [r.payload["speed_mps"] * 3.6 for r in _window_states(log, window)]
    if not speeds:
        raise InsufficientDataError("no state samples in the measurement window")
    return sample_sd(speeds)


def outcome_counts(log: EventLog) -> OutcomeCounts:
    success = wrong = missed = 0
    for r in log.records:
        if r.kind != OUTCOME:
            continue
        result = r.payload["result"]
        if result == SUCCESS:
            success += 1
        elif result == WRONG:
            wrong += 1
        elif result == MISSED:
            missed += 1
    return OutcomeCounts(success=success, wrong=wrong, missed=missed)


def task_completion_times(
    log: EventLog,
) -> tuple[tuple[float, ...], float | None, float | None]:
    """Per-success first-activation-to-confirm durations, with mean and SD."""
    dt = 1.0 / log.header["config"]["tick_rate_hz"]
    first_activation: int | None = None
    target_active = False
    last_confirm_tick: int | None = None
    tcts: list[float] = []
    for i, r in enumerate(log.records):
        if r.kind == TARGET_ASSIGNED:
            target_active = True
            first_activation = None
        elif r.kind == BUTTON:
            bid = r.payload["id"]
            if bid == "activate" and target_active and first_activation is None:
                first_activation = r.tick
            elif bid == "confirm":
                last_confirm_tick = r.tick
        elif r.kind == OUTCOME and r.payload["result"] == SUCCESS:
            if first_activation is None:
                # the attempt may have begun before this target was assigned
                first_activation = r.payload.get("first_activation_tick")
            if first_activation is None or last_confirm_tick is None:
                raise LogIntegrityError(
                    f"record {i}: success outcome without a prior activation"
                )
            tcts.append((last_confirm_tick - first_activation) * dt)
            target_active = False
            first_activation = None
        elif r.kind == OUTCOME and r.payload["result"] == MISSED:
            target_active = False
            first_activation = None
    mean = math.fsum(tcts) / len(tcts) if tcts else None
    sd = sample_sd(tcts) if len(tcts) >= 2 else None
    return tuple(tcts), mean, sd


def build_report(log: EventLog) -> MetricsReport:
    """Pure function of the log; same log, same report."""
    check_integrity(log)
    policy = _policy_from_log(log)
    window = measurement_window(log, policy)
    lateral = [r.payload["lateral"] for r in _window_states(log, window)]
    if len(lateral) < 2:
        raise InsufficientDataError("measurement window holds fewer than 2 samples")
    speeds = [r.payload["speed_mps"] * 3.6 for r in _window_states(log, window)]
    llm = sample_sd(lateral)
    sm = sample_sd(speeds)
    counts = outcome_counts(log)
    flags: list[str] = []
    sr: float | None
    try:
        sr = success_rate(counts)
    except UndefinedRateError:
        sr = None
        flags.append("sr_undefined_no_attempts")
    tcts, tct_mean, tct_sd = task_completion_times(log)
    sample_count = sum(1 for r in log.records if r.kind == TARGET_ASSIGNED)
    if sample_count < MIN_SAMPLE_COUNT:
        flags.append(f"sample_count_below_{MIN_SAMPLE_COUNT}")
    width = log.header["config"]["vehicle"]["width_m"]
    max_dev = max(abs(v) for v in lateral)
    return MetricsReport(
        llm_m=llm,
        sm_kmh=sm,
        sr_percent=sr,
        tct_list_s=tcts,
        tct_mean_s=tct_mean,
        tct_sd_s=tct_sd,
        counts=counts,
        occupied_mean_m=occupied_width(llm, width),
        occupied_max_m=occupied_width(max_dev, width),
        sample_count=sample_count,
        flags=tuple(flags),
    )


def report_to_doc(report: MetricsReport) -> dict:
    return {
        "version": REPORT_VERSION,
        "llm_m": report.llm_m,
        "sm_kmh": report.sm_kmh,
        "sr_percent": report.sr_percent,
        "tct": {
            "values_s": list(report.tct_list_s),
            "mean_s": report.tct_mean_s,
            "sd_s": report.tct_sd_s,
        },
        "counts": {
            "success": report.counts.success,
            "wrong": report.counts.wrong,
            "missed": report.counts.missed,
        },
        "occupied_mean_m": report.occupied_mean_m,
        "occupied_max_m": report.occupied_max_m,
        "sample_count": report.sample_count,
        "flags": list(report.flags),
    }


def report_to_json(report: MetricsReport) -> str:
    return json.dumps(report_to_doc(report), sort_keys=True, separators=(",", ":"))


def render_table(report: MetricsReport) -> str:
    def fmt(v, unit=""):
        return "-" if v is None else f"{v:.3f}{unit}"

    rows = [
        ("lane keeping SD (LLM)", fmt(report.llm_m, " m")),
        ("speed SD (SM)", fmt(report.sm_kmh, " km/h")),
        ("success rate (SR)", fmt(report.sr_percent, " %")),
        ("task completion mean", fmt(report.tct_mean_s, " s")),
        ("task completion SD", fmt(report.tct_sd_s, " s")),
        (
            "outcomes",
            f"{report.counts.success} success / {report.counts.wrong} wrong / "
            f"{report.counts.missed} missed",
        ),
        ("occupied width mean", fmt(report.occupied_mean_m, " m")),
        ("occupied width max", fmt(report.occupied_max_m, " m")),
        ("targets assigned", str(report.sample_count)),
    ]
    if report.flags:
        rows.append(("flags", ", ".join(report.flags)))
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)
