"""Analytics configuration: every tunable constant in one serializable place."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Mapping, Union

from cyphyeye.analytics.composite import CompositeConfig
from cyphyeye.analytics.policy import PolicyConfig


@dataclass(frozen=True)
class AnalyticsConfig:
    # log score model
    embed_dim: int = 16
    hidden_dim: int = 32
    log_epochs: int = 6
    log_lr: float = 0.1
    min_count: int = 2
    theta_risk: float = 2.0
    # autoencoder
    window_ticks: int = 16
    ae_hidden: int = 32
    ae_bottleneck: int = 12
    ae_epochs: int = 120
    ae_lr: float = 0.05
    # composite
    alpha: float = 0.2
    delta: int = 5
    horizon: int = 5
    watch: float = 0.25
    act: float = 0.5
    emergency: float = 0.75
    behav_floor: float = 1.0
    behav_span: float = 2.0
    # policy
    beta: float = 1.0
    rho: float = 0.5
    tau: float = 50.0
    gamma: float = 0.9
    learning_rate: float = 0.5
    eps_start: float = 0.2
    eps_end: float = 0.01
    eps_decay_steps: int = 300

    def composite(self) -> CompositeConfig:
        return CompositeConfig(alpha=self.alpha, delta=self.delta, horizon=self.horizon,
                               watch=self.watch, act=self.act, emergency=self.emergency,
                               behav_floor=self.behav_floor, behav_span=self.behav_span)

    def policy(self) -> PolicyConfig:
        return PolicyConfig(beta=self.beta, rho=self.rho, tau=self.tau, gamma=self.gamma,
                            learning_rate=self.learning_rate, eps_start=self.eps_start,
                            eps_end=self.eps_end, eps_decay_steps=self.eps_decay_steps)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


def load_config(source: Union[str, Path, Mapping, None]) -> AnalyticsConfig:
    """Missing keys take their defaults; unknown keys are rejected."""
    if source is None:
        return AnalyticsConfig()
    if isinstance(source, (str, Path)):
        source = json.loads(Path(source).read_text())
    known = {f.name for f in fields(AnalyticsConfig)}
    unknown = set(source) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return AnalyticsConfig(**source)
