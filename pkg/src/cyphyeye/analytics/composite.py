"""Composite per-system anomaly: level, velocity, forecast, action stage.

level is an exponentially weighted moving average of max(normalized
behavioral anomaly, high-risk rate), clamped to [0, 1]. The behavioral input
arrives on its own scale — 1.0 sits at the edge of stable training behavior —
so it is rescaled to the level domain first: everything at or below
behav_floor reads 0, and behav_floor + behav_span reads 1. velocity is the
level change per tick over a short lookback; the forecast extrapolates
linearly over the configured horizon and is clamped. The action stage follows
fixed level thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

STAGES = ("normal", "watch", "act", "emergency")


@dataclass(frozen=True)
class CompositeConfig:
    alpha: float = 0.2          # EWMA weight on the newest sample
    delta: int = 5              # velocity lookback, ticks
    horizon: int = 5            # forecast horizon, ticks
    watch: float = 0.25
    act: float = 0.5
    emergency: float = 0.75
    behav_floor: float = 1.0    # behavioral reading mapped to level 0
    behav_span: float = 2.0     # behavioral units from floor to level 1


@dataclass(frozen=True)
class AnomalyState:
    system_id: str
    level: float
    velocity: float
    forecast: float
    stage: str
    behavioral: float
    risk_rate: float

    def to_dict(self) -> dict:
        return {
            "system": self.system_id,
            "level": round(self.level, 9), "velocity": round(self.velocity, 9),
            "forecast": round(self.forecast, 9), "stage": self.stage,
            "behavioral": round(self.behavioral, 9), "risk_rate": round(self.risk_rate, 9),
        }


def _clamp(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else x


def stage_for(level: float, config: CompositeConfig) -> str:
    if level >= config.emergency:
        return "emergency"
    if level >= config.act:
        return "act"
    if level >= config.watch:
        return "watch"
    return "normal"


def normalized_behavioral(behavioral: float, config: CompositeConfig) -> float:
    """Rescale a raw behavioral anomaly to the [0, 1] level domain."""
    return _clamp((behavioral - config.behav_floor) / config.behav_span)


def composite_anomaly(samples: Sequence[tuple[float, float]],
                      config: CompositeConfig = CompositeConfig(),
                      system_id: str = "") -> AnomalyState:
    """Fold a history of (behavioral, risk_rate) samples, oldest first."""
    if not samples:
        raise ValueError("need at least one sample")
    ewma = None
    levels = []
    for behavioral, risk in samples:
        x = max(normalized_behavioral(behavioral, config), risk)
        ewma = x if ewma is None else config.alpha * x + (1 - config.alpha) * ewma
        levels.append(_clamp(ewma))
    level = levels[-1]
    if len(levels) == 1:
        velocity = 0.0
    else:
        d = min(config.delta, len(levels) - 1)
        velocity = (levels[-1] - levels[-1 - d]) / d
    forecast = _clamp(level + velocity * config.horizon)
    behavioral, risk = samples[-1]
    return AnomalyState(system_id=system_id, level=level, velocity=velocity,
                        forecast=forecast, stage=stage_for(level, config),
                        behavioral=behavioral, risk_rate=risk)


class CompositeTracker:
    """Streaming equivalent of composite_anomaly for one system."""

    def __init__(self, system_id: str, config: CompositeConfig = CompositeConfig()):
        self.system_id = system_id
        self.config = config
        self._ewma = None
        self._recent: list[float] = []  # last delta+1 clamped levels

    def push(self, behavioral: float, risk_rate: float) -> AnomalyState:
        c = self.config
        x = max(normalized_behavioral(behavioral, c), risk_rate)
        self._ewma = x if self._ewma is None else c.alpha * x + (1 - c.alpha) * self._ewma
        level = _clamp(self._ewma)
        self._recent.append(level)
        if len(self._recent) > c.delta + 1:
            self._recent.pop(0)
        if len(self._recent) == 1:
            velocity = 0.0
        else:
            d = len(self._recent) - 1
            velocity = (self._recent[-1] - self._recent[0]) / d
        forecast = _clamp(level + velocity * c.horizon)
        return AnomalyState(system_id=self.system_id, level=level, velocity=velocity,
                            forecast=forecast, stage=stage_for(level, c),
                            behavioral=behavioral, risk_rate=risk_rate)
