"""Deterministic driving simulator for two-phase point-and-select POI input.

Rough pointing resolves a calibrated finger ray to the minimum-angle
building; fine selection adjusts and confirms it on a snapshot of the
front view.  Sessions run headless with synthetic agents or live over
WebSocket, log every event, replay bit-exactly, and report lane-keeping,
speed-keeping, success-rate and completion-time metrics.
"""

__version__ = "0.1.0"
