"""Zoned IT/OT network model: zones, devices, field-bus segments, firewall rules.

The topology is an immutable value. Rule mutations return a new version with a
bumped tick and an appended change event, so concurrent readers can keep using
older snapshots while a single writer applies changes in tick order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, Union


class TopologyError(ValueError):
    """Raised when a topology document violates a structural invariant."""


class ZoneKind(str, Enum):
    INTERNET = "internet"
    CORPORATE_LAN = "corporate-lan"
    DMZ = "dmz"
    FACILITIES = "facilities"
    LEASED_BUILDING = "leased-building"
    REMOTE_FACILITY = "remote-facility"


class DeviceClass(str, Enum):
    PLC = "plc"
    RTU = "rtu"
    IED = "ied"
    SENSOR = "sensor"
    ACTUATOR = "actuator"
    HMI = "hmi"
    NAC = "nac"
    IT_SERVER = "it-server"
    BMS = "bms"
    VOLTTRON_AGENT = "volttron-agent"
    VOLTTRON_CENTRAL = "volttron-central"
    VOLTTRON_PASSTHROUGH = "volttron-passthrough"
    WORKSTATION = "workstation"


#: Classes that sit on serial field-bus media and therefore need a segment.
SERIAL_CLASSES = frozenset(
    {DeviceClass.SENSOR, DeviceClass.ACTUATOR, DeviceClass.PLC, DeviceClass.RTU, DeviceClass.IED}
)


class SegmentTopology(str, Enum):
    BUS = "bus"
    STAR = "star"
    RING = "ring"


class RuleOrigin(str, Enum):
    BASELINE = "baseline"
    POLICY = "policy"
    OPERATOR = "operator"


#: Precedence order, strongest first.
ORIGIN_PRECEDENCE = (RuleOrigin.OPERATOR, RuleOrigin.POLICY, RuleOrigin.BASELINE)


@dataclass(frozen=True)
class Zone:
    id: str
    kind: ZoneKind


@dataclass(frozen=True)
class ProcessPoint:
    """A controlled physical point attached to a device."""

    unit: str
    setpoint: float
    initial: float
    bounds: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.bounds
        if not lo < hi:
            raise TopologyError(f"point bounds must be ordered, got {self.bounds}")


@dataclass(frozen=True)
class Device:
    id: str
    zone: str
    cls: DeviceClass
    address: str
    segment: Optional[str] = None
    point: Optional[ProcessPoint] = None
    x: Optional[float] = None
    y: Optional[float] = None


@dataclass(frozen=True)
class FieldBusSegment:
    id: str
    topology: SegmentTopology
    members: tuple[str, ...]
    nac: str
    ring_consumes: Optional[bool] = None

    def __post_init__(self):
        if len(self.members) < 1:
            raise TopologyError(f"segment {self.id}: members must be non-empty")
        if (self.topology is SegmentTopology.RING) != (self.ring_consumes is not None):
            raise TopologyError(
                f"segment {self.id}: ring_consumes must be set iff topology is ring"
            )


@dataclass(frozen=True)
class FirewallRule:
    id: str
    src_zone: str
    dst_zone: str
    allow: bool
    origin: RuleOrigin
    created_at: int = 0


@dataclass(frozen=True)
class RuleChange:
    """One entry in the topology's rule-change log."""

    tick: int
    action: str  # "set" or "clear"
    origin: RuleOrigin
    src_zone: Optional[str] = None
    dst_zone: Optional[str] = None
    allow: Optional[bool] = None


@dataclass(frozen=True)
class MonitorPosition:
    kind: str  # anywhere-on-bus | inline-on-spoke | inline-on-segment
    spoke: Optional[str] = None
    index: Optional[int] = None


@dataclass(frozen=True)
class MonitorPlan:
    segment: str
    monitor_count: int
    positions: tuple[MonitorPosition, ...]

    def __post_init__(self):
        if self.monitor_count != len(self.positions):
            raise TopologyError("monitor count must match positions length")


@dataclass(frozen=True)
class Topology:
    zones: tuple[Zone, ...]
    devices: tuple[Device, ...]
    segments: tuple[FieldBusSegment, ...]
    links: frozenset[frozenset]  # physical zone adjacency, undirected
    rules: tuple[FirewallRule, ...]
    tick: int = 0
    changes: tuple[RuleChange, ...] = ()

    # -- lookups ----------------------------------------------------------

    def zone(self, zone_id: str) -> Zone:
        for z in self.zones:
            if z.id == zone_id:
                return z
        raise TopologyError(f"unknown zone {zone_id!r}")

    def device(self, device_id: str) -> Device:
        for d in self.devices:
            if d.id == device_id:
                return d
        raise TopologyError(f"unknown device {device_id!r}")

    def segment(self, segment_id: str) -> FieldBusSegment:
        for s in self.segments:
            if s.id == segment_id:
                return s
        raise TopologyError(f"unknown segment {segment_id!r}")

    def devices_in_zone(self, zone_id: str) -> tuple[Device, ...]:
        return tuple(d for d in self.devices if d.zone == zone_id)

    def effective_rule(self, src_zone: str, dst_zone: str) -> Optional[FirewallRule]:
        """Highest-precedence rule on the ordered pair, or None."""
        for origin in ORIGIN_PRECEDENCE:
            for r in self.rules:
                if r.origin is origin and r.src_zone == src_zone and r.dst_zone == dst_zone:
                    return r
        return None

    def crossing_allowed(self, src_zone: str, dst_zone: str) -> bool:
        """Zone crossings are default-deny; only an effective allow opens them."""
        rule = self.effective_rule(src_zone, dst_zone)
        return rule is not None and rule.allow


# ---------------------------------------------------------------------------
# Construction


def _require_unique(kind: str, ids: Iterable[str]) -> None:
    seen = set()
    for i in ids:
        if i in seen:
            raise TopologyError(f"duplicate {kind} id {i!r}")
        seen.add(i)


def build_topology(spec: Union[Mapping, str, Path]) -> Topology:
    """Validate a TopologySpec document and return the topology.

    `spec` is a parsed JSON mapping, or a path to a JSON file with arrays
    `zones`, `devices`, `segments`, `links`, `baseline_rules`.

    Baseline denies for internet->facilities and corporate->facilities are
    recorded explicitly for any facilities zone without a declared allow on
    that ordered pair, so the default posture is inspectable in the rule table.
    """
    if isinstance(spec, (str, Path)):
        spec = json.loads(Path(spec).read_text())

    zones = tuple(
        Zone(id=z["id"], kind=ZoneKind(z["kind"])) for z in spec.get("zones", ())
    )
    _require_unique("zone", (z.id for z in zones))
    zone_ids = {z.id for z in zones}
    internet = [z for z in zones if z.kind is ZoneKind.INTERNET]
    if len(internet) != 1:
        raise TopologyError(f"expected exactly one internet zone, found {len(internet)}")

    devices = []
    for entry in spec.get("devices", ()):
        point = None
        if entry.get("point") is not None:
            p = entry["point"]
            point = ProcessPoint(
                unit=p["unit"],
                setpoint=float(p["setpoint"]),
                initial=float(p.get("initial", p["setpoint"])),
                bounds=(float(p["bounds"][0]), float(p["bounds"][1])),
            )
        devices.append(
            Device(
                id=entry["id"],
                zone=entry["zone"],
                cls=DeviceClass(entry["class"]),
                address=entry["address"],
                segment=entry.get("segment"),
                point=point,
                x=entry.get("x"),
                y=entry.get("y"),
            )
        )
    devices = tuple(devices)
    _require_unique("device", (d.id for d in devices))
    _require_unique("address", (d.address for d in devices))
    device_ids = {d.id for d in devices}

    segments = tuple(
        FieldBusSegment(
            id=s["id"],
            topology=SegmentTopology(s["topology"]),
            members=tuple(s["members"]),
            nac=s["nac"],
            ring_consumes=s.get("ring_consumes"),
        )
        for s in spec.get("segments", ())
    )
    _require_unique("segment", (s.id for s in segments))
    segment_ids = {s.id for s in segments}

    for d in devices:
        if d.zone not in zone_ids:
            raise TopologyError(f"device {d.id}: dangling zone {d.zone!r}")
        if d.segment is not None and d.segment not in segment_ids:
            raise TopologyError(f"device {d.id}: dangling segment {d.segment!r}")
        if d.cls in (DeviceClass.SENSOR, DeviceClass.ACTUATOR) and d.segment is None:
            raise TopologyError(f"device {d.id}: {d.cls.value} requires a field-bus segment")
        if d.cls is DeviceClass.VOLTTRON_PASSTHROUGH:
            zone = next(z for z in zones if z.id == d.zone)
            if zone.kind is not ZoneKind.DMZ:
                raise TopologyError(f"device {d.id}: volttron-passthrough must sit in a dmz zone")

    by_id = {d.id: d for d in devices}
    nac_to_segment: dict[str, str] = {}
    for s in segments:
        if s.nac not in device_ids:
            raise TopologyError(f"segment {s.id}: dangling nac {s.nac!r}")
        if by_id[s.nac].cls is not DeviceClass.NAC:
            raise TopologyError(f"segment {s.id}: nac {s.nac!r} is not a nac device")
        if s.nac in nac_to_segment:
            raise TopologyError(f"nac {s.nac!r} bridges more than one segment")
        nac_to_segment[s.nac] = s.id
        for m in s.members:
            if m not in device_ids:
                raise TopologyError(f"segment {s.id}: dangling member {m!r}")
            member = by_id[m]
            if member.cls not in SERIAL_CLASSES:
                raise TopologyError(f"segment {s.id}: member {m!r} is not a serial device")
            if member.segment != s.id:
                raise TopologyError(f"segment {s.id}: member {m!r} does not declare this segment")

    links = set()
    for pair in spec.get("links", ()):
        a, b = pair
        if a not in zone_ids or b not in zone_ids:
            raise TopologyError(f"link {pair}: dangling zone reference")
        if a == b:
            raise TopologyError(f"link {pair}: zones must differ")
        links.add(frozenset((a, b)))

    rules: list[FirewallRule] = []
    n = 0
    for entry in spec.get("baseline_rules", ()):
        src, dst = entry["src"], entry["dst"]
        if src not in zone_ids or dst not in zone_ids:
            raise TopologyError(f"baseline rule {entry}: dangling zone reference")
        n += 1
        rules.append(
            FirewallRule(
                id=f"baseline-{n}",
                src_zone=src,
                dst_zone=dst,
                allow=bool(entry["allow"]),
                origin=RuleOrigin.BASELINE,
                created_at=0,
            )
        )
    declared = {(r.src_zone, r.dst_zone) for r in rules}
    internet_id = internet[0].id
    corporate = [z.id for z in zones if z.kind is ZoneKind.CORPORATE_LAN]
    for fac in (z.id for z in zones if z.kind is ZoneKind.FACILITIES):
        for src in [internet_id] + corporate:
            if (src, fac) not in declared:
                n += 1
                rules.append(
                    FirewallRule(
                        id=f"baseline-{n}",
                        src_zone=src,
                        dst_zone=fac,
                        allow=False,
                        origin=RuleOrigin.BASELINE,
                        created_at=0,
                    )
                )

    return Topology(
        zones=zones,
        devices=devices,
        segments=segments,
        links=frozenset(links),
        rules=tuple(rules),
    )


# ---------------------------------------------------------------------------
# Monitor placement


def monitor_placement(segment: FieldBusSegment) -> MonitorPlan:
    """Monitors needed to observe a segment, by media topology.

    bus: one monitor anywhere sees the whole broadcast segment.
    star: point-to-point spokes, one inline monitor per spoke.
    ring: one per segment edge when stations consume commands addressed to
    them, otherwise the ring still broadcasts and one monitor suffices.
    """
    n = len(segment.members)
    if segment.topology is SegmentTopology.BUS:
        positions = (MonitorPosition(kind="anywhere-on-bus"),)
    elif segment.topology is SegmentTopology.STAR:
        positions = tuple(MonitorPosition(kind="inline-on-spoke", spoke=m) for m in segment.members)
    elif segment.ring_consumes:
        positions = tuple(MonitorPosition(kind="inline-on-segment", index=i) for i in range(n))
    else:
        positions = (MonitorPosition(kind="anywhere-on-bus"),)
    return MonitorPlan(segment=segment.id, monitor_count=len(positions), positions=positions)


# ---------------------------------------------------------------------------
# Reachability


def reachable(topology: Topology, src: str, dst: str) -> bool:
    """True iff a zone path exists whose every crossing has an effective allow.

    Devices share a LAN within a zone, so reachability is decided purely on
    the zone graph; src == dst is trivially reachable.
    """
    src_zone = topology.device(src).zone
    dst_zone = topology.device(dst).zone
    if src_zone == dst_zone:
        return True
    frontier = [src_zone]
    visited = {src_zone}
    while frontier:
        here = frontier.pop()
        for link in topology.links:
            if here not in link:
                continue
            (there,) = link - {here}
            if there in visited:
                continue
            if not topology.crossing_allowed(here, there):
                continue
            if there == dst_zone:
                return True
            visited.add(there)
            frontier.append(there)
    return False


def reachability_matrix(topology: Topology) -> dict[tuple[str, str], bool]:
    """Brute-force all ordered device pairs. Test helper, desk scale only."""
    ids = [d.id for d in topology.devices]
    return {(a, b): reachable(topology, a, b) for a in ids for b in ids}


# ---------------------------------------------------------------------------
# Rule mutation


def set_rule(topology: Topology, rule: FirewallRule) -> Topology:
    """Install `rule`, replacing any active rule of the same origin on the pair."""
    topology.zone(rule.src_zone)
    topology.zone(rule.dst_zone)
    tick = topology.tick + 1
    stamped = replace(rule, created_at=tick)
    kept = tuple(
        r
        for r in topology.rules
        if not (r.origin is rule.origin and r.src_zone == rule.src_zone and r.dst_zone == rule.dst_zone)
    )
    change = RuleChange(
        tick=tick,
        action="set",
        origin=rule.origin,
        src_zone=rule.src_zone,
        dst_zone=rule.dst_zone,
        allow=rule.allow,
    )
    return replace(
        topology,
        rules=kept + (stamped,),
        tick=tick,
        changes=topology.changes + (change,),
    )


def clear_rules(topology: Topology, origin: RuleOrigin) -> Topology:
    """Drop every rule of the given origin."""
    tick = topology.tick + 1
    kept = tuple(r for r in topology.rules if r.origin is not origin)
    change = RuleChange(tick=tick, action="clear", origin=origin)
    return replace(topology, rules=kept, tick=tick, changes=topology.changes + (change,))
