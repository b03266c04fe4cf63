"""Desk-scale cyber-physical defense workbench.

Subsystems:
  topology   zoned network model, firewall rules, monitor placement
  capture    field-bus frame encoding, CRC, capture files
  plantsim   deterministic plant + traffic simulator
  scenarios  threat scenario catalog and injection
  analytics  log scoring, behavioral anomaly, composite risk, quarantine policy
  service    event store, pipeline, operator API, command-line entry
"""

from cyphyeye.topology import (
    build_topology,
    monitor_placement,
    reachable,
    set_rule,
    clear_rules,
    Topology,
    TopologyError,
    FirewallRule,
    RuleOrigin,
)

__all__ = [
    "build_topology",
    "monitor_placement",
    "reachable",
    "set_rule",
    "clear_rules",
    "Topology",
    "TopologyError",
    "FirewallRule",
    "RuleOrigin",
]

__version__ = "0.1.0"
