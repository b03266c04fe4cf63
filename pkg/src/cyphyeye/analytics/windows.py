"""Fixed-layout behavior windows over field-bus activity.

Each window covers W consecutive ticks of one segment, six features per tick,
tick-major:

  read_count       request frames asking for status
  write_count      setpoint write requests
  firmware_count   firmware-update requests
  mean_setpoint_dev  mean |value - setpoint| over the segment's points
  breach_count     points outside safe bounds this tick
  status_count     status responses seen on the segment

The layout is versioned; models and stored windows are only comparable within
one version.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from cyphyeye import capture

FEATURES = ("read_count", "write_count", "firmware_count",
            "mean_setpoint_dev", "breach_count", "status_count")
FEATURE_VERSION = 1
_BREACH_POS = FEATURES.index("breach_count")


def breach_indices(window_ticks: int) -> list[int]:
    """Positions of the breach feature inside a flattened window vector."""
    f = len(FEATURES)
    return [t * f + _BREACH_POS for t in range(window_ticks)]


@dataclass(frozen=True)
class ObsTick:
    read_count: float = 0.0
    write_count: float = 0.0
    firmware_count: float = 0.0
    mean_setpoint_dev: float = 0.0
    breach_count: float = 0.0
    status_count: float = 0.0

    def vector(self) -> list[float]:
        return [getattr(self, name) for name in FEATURES]


def tick_observations(events: Sequence, topology) -> dict[str, ObsTick]:
    """Fold one tick's sim events into per-segment observations.

    Frame payloads are decoded from their raw bytes, so the features reflect
    what a tap actually parses, not what the sim intended to send.
    """
    segment_of = {}
    for seg in topology.segments:
        for member in seg.members:
            segment_of[member] = seg.id
    counts = {seg.id: {"read": 0, "write": 0, "fw": 0, "status": 0,
                       "devs": [], "breach": 0} for seg in topology.segments}
    for event in events:
        if event.kind == "frame-emitted":
            payload = event.payload
            seg = counts.get(payload["segment"])
            if seg is None:
                continue
            tx = capture.decode_frame(bytes.fromhex(payload["raw"]))
            if not tx.valid:
                continue
            if payload["response"]:
                if tx.op == capture.OP_READ_STATUS:
                    seg["status"] += 1
            elif tx.op == capture.OP_READ_STATUS:
                seg["read"] += 1
            elif tx.op == capture.OP_WRITE_SETPOINT:
                seg["write"] += 1
            elif tx.op == capture.OP_FIRMWARE_UPDATE:
                seg["fw"] += 1
        elif event.kind == "process-updated":
            device = event.payload["device"]
            seg_id = segment_of.get(device)
            if seg_id is None:
                continue
            seg = counts[seg_id]
            seg["devs"].append(abs(event.payload["value"] - event.payload["setpoint"]))
            seg["breach"] += 1 if event.payload["breach"] else 0
    out = {}
    for seg_id, c in counts.items():
        devs = c["devs"]
        out[seg_id] = ObsTick(
            read_count=float(c["read"]), write_count=float(c["write"]),
            firmware_count=float(c["fw"]),
            mean_setpoint_dev=float(np.mean(devs)) if devs else 0.0,
            breach_count=float(c["breach"]), status_count=float(c["status"]),
        )
    return out


class WindowBuilder:
    """Accumulates per-tick observations into non-overlapping W-tick windows."""

    def __init__(self, window_ticks: int = 16):
        if window_ticks < 1:
            raise ValueError("window_ticks must be >= 1")
        self.window_ticks = window_ticks
        self._buffer: list[ObsTick] = []

    def push(self, obs: ObsTick) -> Optional[np.ndarray]:
        self._buffer.append(obs)
        if len(self._buffer) < self.window_ticks:
            return None
        vec = np.array([x for obs in self._buffer for x in obs.vector()], dtype=np.float64)
        self._buffer.clear()
        return vec


def group_by_tick(events: Iterable) -> Iterable[tuple[int, list]]:
    """Group a tick-ordered event stream into (tick, events) batches."""
    current_tick, batch = None, []
    for event in events:
        if current_tick is None or event.tick == current_tick:
            current_tick = event.tick
            batch.append(event)
        else:
            yield current_tick, batch
            current_tick, batch = event.tick, [event]
    if batch:
        yield current_tick, batch


def build_windows(events: Sequence, topology, window_ticks: int = 16) -> dict[str, list[np.ndarray]]:
    """Windows per segment from a complete event stream (training helper)."""
    builders = {seg.id: WindowBuilder(window_ticks) for seg in topology.segments}
    out = {seg.id: [] for seg in topology.segments}
    for _, batch in group_by_tick(events):
        obs = tick_observations(batch, topology)
        for seg_id, o in obs.items():
            vec = builders[seg_id].push(o)
            if vec is not None:
                out[seg_id].append(vec)
    return out
