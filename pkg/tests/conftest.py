"""Shared fixtures: the shipped plant file, a built topology, and one
session-scoped pair of trained detector models (training is the expensive
part, ~2 s, so every test that only needs *a* trained model shares it)."""

import json
from pathlib import Path

import pytest

from cyphyeye.topology import build_topology
from cyphyeye.scenarios import load_scenario
from cyphyeye.service import train_models

ROOT = Path(__file__).resolve().parent.parent
DATA_SPEC = ROOT / "data" / "xyz.json"
SCENARIO_DIR = ROOT / "scenarios"

SCENARIO_IDS = [
    "unauthorized-access",
    "data-manipulation",
    "vent-hood-offline",
    "chiller-degraded",
    "negative-pressure-compromised",
    "overpressurization",
    "ups-compromise",
    "setpoint-alteration",
    "query-storm",
]


@pytest.fixture(scope="session")
def xyz_spec() -> dict:
    return json.loads(DATA_SPEC.read_text())


@pytest.fixture(scope="session")
def xyz_topology(xyz_spec):
    return build_topology(xyz_spec)


@pytest.fixture(scope="session")
def trained_models(xyz_topology):
    return train_models(xyz_topology, seeds=(101, 102), ticks=300, seed=7)


def scenario(scenario_id: str):
    return load_scenario(SCENARIO_DIR / f"{scenario_id}.json")
