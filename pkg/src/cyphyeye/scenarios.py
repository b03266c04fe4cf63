"""Attack scenario catalog: threat kinds, stage schedules, validation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

STAGE_ORDER = ("access", "discovery", "control", "damage", "cleanup")

THREATS = (
    "unauthorized-access",
    "data-manipulation",
    "vent-hood-offline",
    "chiller-degraded",
    "negative-pressure-compromised",
    "overpressurization",
    "ups-compromise",
    "setpoint-alteration",
    "query-storm",
    "active-scan-fault",
)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class StageWindow:
    stage: str
    start: int
    end: int  # exclusive

    def __post_init__(self):
        if self.stage not in STAGE_ORDER:
            raise ScenarioError(f"unknown stage {self.stage!r}")
        if not 0 <= self.start < self.end:
            raise ScenarioError(f"stage {self.stage}: bad interval [{self.start}, {self.end})")


@dataclass(frozen=True)
class AttackScenario:
    id: str
    threat: str
    intensity: float
    origin: str
    targets: tuple[str, ...]
    stages: tuple[StageWindow, ...]

    def __post_init__(self):
        if self.threat not in THREATS:
            raise ScenarioError(f"unknown threat {self.threat!r}")
        if not 0 < self.intensity <= 1:
            raise ScenarioError(f"intensity must be in (0, 1], got {self.intensity}")
        if not self.stages:
            raise ScenarioError("scenario needs at least one stage window")
        indices = [STAGE_ORDER.index(w.stage) for w in self.stages]
        if indices != sorted(indices) or len(set(indices)) != len(indices):
            raise ScenarioError("stages must appear in access->discovery->control->damage->cleanup order")
        for a, b in zip(self.stages, self.stages[1:]):
            if b.start < a.end:
                raise ScenarioError(f"stage intervals overlap: {a.stage} and {b.stage}")


def stage_at(scenario: AttackScenario, tick: int) -> Optional[str]:
    for w in scenario.stages:
        if w.start <= tick < w.end:
            return w.stage
    return None


def load_scenario(source: Union[str, Path, Mapping]) -> AttackScenario:
    if isinstance(source, (str, Path)):
        source = json.loads(Path(source).read_text())
    try:
        stages = tuple(StageWindow(stage=w["stage"], start=int(w["start"]), end=int(w["end"]))
                       for w in source["stages"])
        return AttackScenario(
            id=source["id"],
            threat=source["threat"],
            intensity=float(source.get("intensity", 1.0)),
            origin=source["origin"],
            targets=tuple(source["targets"]),
            stages=stages,
        )
    except KeyError as e:
        raise ScenarioError(f"scenario missing field {e.args[0]!r}") from None


def load_catalog(directory: Union[str, Path]) -> dict[str, AttackScenario]:
    catalog = {}
    for path in sorted(Path(directory).glob("*.json")):
        sc = load_scenario(path)
        if sc.id in catalog:
            raise ScenarioError(f"duplicate scenario id {sc.id!r}")
        catalog[sc.id] = sc
    return catalog
