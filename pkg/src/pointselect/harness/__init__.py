"""Deterministic session loop, agents, logging, replay, CLI and live server."""

from .config import DriverParams, PointerParams, SessionConfig, C1, C2
from .engine import AbortedSessionError, Engine
from .run import ReplayResult, replay, run_session

__all__ = [
    "AbortedSessionError",
    "C1",
    "C2",
    "DriverParams",
    "Engine",
    "PointerParams",
    "ReplayResult",
    "SessionConfig",
    "replay",
    "run_session",
]
