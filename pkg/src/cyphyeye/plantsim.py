"""Deterministic discrete-time plant and traffic simulator.

Each tick the sim emits cyclic field-bus transactions from templates, evolves
every controlled point by a first-order lag (value += k*(setpoint - value) +
noise), emits IT-side flow events, and applies the effects of any injected
attack scenarios stage by stage.

Determinism contract: identical (topology, templates, seed, config) produce
byte-identical event streams under `to_json_line`. All randomness comes from
one `random.Random(seed)` consumed in a fixed order per tick; passive taps are
outside the sim entirely, so observation can never perturb the plant.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from cyphyeye import capture
from cyphyeye.scenarios import AttackScenario, stage_at
from cyphyeye.topology import DeviceClass, Topology, reachable

KIND_FRAME = "frame-emitted"
KIND_FLOW = "flow-emitted"
KIND_PROCESS = "process-updated"
KIND_STAGE = "attack-stage-entered"
KIND_FAULT = "device-fault"


class SimError(ValueError):
    pass


class InjectError(SimError):
    """Scenario conflicts with one already active on the same devices."""


@dataclass(frozen=True)
class SimEvent:
    tick: int
    kind: str
    payload: dict


def to_json_line(event: SimEvent) -> str:
    """Canonical single-line serialization (stable key order)."""
    return json.dumps(
        {"tick": event.tick, "kind": event.kind, "payload": event.payload},
        sort_keys=True, separators=(",", ":"),
    )


def stream_bytes(events: Iterable[SimEvent]) -> bytes:
    return "\n".join(to_json_line(e) for e in events).encode("utf-8")


@dataclass(frozen=True)
class TransactionTemplate:
    initiator: str
    target: str
    kind: str  # read-status | write-setpoint | firmware-update
    period: int
    phase: int = 0
    value: Optional[float] = None  # write value in engineering units; None = refresh setpoint

    def __post_init__(self):
        if self.period < 1:
            raise SimError(f"template {self.initiator}->{self.target}: period must be >= 1")


@dataclass(frozen=True)
class FlowTemplate:
    src: str  # device id
    dst: str  # device id
    period: int
    size: int
    size_jitter: int = 0
    phase: int = 0
    proto: str = "other"


@dataclass
class PointState:
    value: float
    setpoint: float
    bounds: tuple[float, float]
    unit: str

    @property
    def breach(self) -> bool:
        lo, hi = self.bounds
        return self.value < lo or self.value > hi


# Register layout: each unit exposes a status register and a setpoint register.
def status_register(unit_id: int) -> int:
    return unit_id * 4


def setpoint_register(unit_id: int) -> int:
    return unit_id * 4 + 1


FIRMWARE_REGISTER = 0x7000


def scale_value(v: float) -> int:
    """Engineering value to 16-bit fixed point (x10, two's complement)."""
    return int(round(v * 10)) & 0xFFFF


def unscale_value(raw: int) -> float:
    if raw >= 0x8000:
        raw -= 0x10000
    return raw / 10.0


def default_templates(topology: Topology) -> list[TransactionTemplate]:
    """Baseline duty cycle: poll every segment member on a 5-tick period and
    refresh each setpoint on a 50-tick period, phases staggered by position.
    """
    templates = []
    for seg in sorted(topology.segments, key=lambda s: s.id):
        for i, member in enumerate(seg.members):
            templates.append(TransactionTemplate(
                initiator=seg.nac, target=member, kind=capture.OP_READ_STATUS,
                period=5, phase=i % 5))
            if topology.device(member).point is not None:
                templates.append(TransactionTemplate(
                    initiator=seg.nac, target=member, kind=capture.OP_WRITE_SETPOINT,
                    period=50, phase=(i * 7) % 50))
    return templates


def default_flow_templates(topology: Topology) -> list[FlowTemplate]:
    """Baseline IT-side exchanges: agent telemetry to the central collector,
    NAC tunnel batches to the head-end, and workstation HTTP chatter.
    """
    flows = []
    devices = sorted(topology.devices, key=lambda d: d.id)
    agents = [d for d in devices if d.cls is DeviceClass.VOLTTRON_AGENT]
    central = next((d for d in devices if d.cls is DeviceClass.VOLTTRON_CENTRAL), None)
    head_end = next((d for d in devices if d.cls is DeviceClass.BMS), None)
    server = next((d for d in devices if d.cls is DeviceClass.IT_SERVER), None)
    if central is not None:
        for i, agent in enumerate(agents):
            flows.append(FlowTemplate(agent.id, central.id, period=4, phase=i % 4,
                                      size=220, size_jitter=40, proto="vip"))
            flows.append(FlowTemplate(central.id, agent.id, period=4, phase=i % 4,
                                      size=60, size_jitter=10, proto="vip"))
    if head_end is not None:
        for nac in (d for d in devices if d.cls is DeviceClass.NAC):
            flows.append(FlowTemplate(nac.id, head_end.id, period=1,
                                      size=180, size_jitter=20, proto="ot-tunnel"))
    if server is not None:
        for i, ws in enumerate(d for d in devices if d.cls is DeviceClass.WORKSTATION
                               and topology.zone(d.zone).kind.value == "corporate-lan"):
            flows.append(FlowTemplate(ws.id, server.id, period=7 + i * 2,
                                      size=520, size_jitter=80, proto="http"))
    return flows


@dataclass
class _ScenarioState:
    scenario: AttackScenario
    entered: set = field(default_factory=set)
    sweep_cursor: int = 0
    suppress_acc: dict = field(default_factory=dict)  # device -> accumulator
    original_setpoints: dict = field(default_factory=dict)
    pending_restores: list = field(default_factory=list)  # (tick, device, value)
    damage_started: bool = False
    cleanup_started: bool = False
    faulted: set = field(default_factory=set)


class Sim:
    """One stepping world. Single-threaded; share nothing between instances."""

    def __init__(self, topology: Topology, templates: Sequence[TransactionTemplate],
                 seed: int, *, flow_templates: Optional[Sequence[FlowTemplate]] = None,
                 k: float = 0.1, noise_amp: float = 0.01, jitter: int = 1):
        for t in templates:
            self._check_template(topology, t)
        self.topology = topology
        self.templates = list(templates)
        self.flow_templates = list(flow_templates if flow_templates is not None
                                   else default_flow_templates(topology))
        for f in self.flow_templates:
            topology.device(f.src), topology.device(f.dst)
        self.seed = seed
        self.k = k
        self.noise_amp = noise_amp  # fraction of each point's safe range
        self.jitter = jitter
        self.rng = random.Random(seed)
        self.tick = 0
        self.process: dict[str, PointState] = {}
        for d in topology.devices:
            if d.point is not None:
                p = d.point
                self.process[d.id] = PointState(value=p.initial, setpoint=p.setpoint,
                                                bounds=p.bounds, unit=p.unit)
        self._units: dict[str, int] = {}
        self._segment_of: dict[str, str] = {}
        for seg in topology.segments:
            for i, member in enumerate(seg.members):
                self._units[member] = i + 1
                self._segment_of[member] = seg.id
        self._pending_frames: dict[int, list] = {}  # tick -> [(template_idx, ...)]
        self._scenarios: list[_ScenarioState] = []

    @staticmethod
    def _check_template(topology: Topology, t: TransactionTemplate) -> None:
        topology.device(t.initiator)
        target = topology.device(t.target)
        if t.kind not in (capture.OP_READ_STATUS, capture.OP_WRITE_SETPOINT,
                          capture.OP_FIRMWARE_UPDATE):
            raise SimError(f"template kind {t.kind!r} unknown")
        if t.kind in (capture.OP_READ_STATUS, capture.OP_WRITE_SETPOINT) and target.segment is None:
            raise SimError(f"template target {t.target!r} is not on a field-bus segment")

    # -- scenario injection -------------------------------------------------

    def inject(self, scenario: AttackScenario) -> "Sim":
        self.topology.device(scenario.origin)
        for t in scenario.targets:
            self.topology.device(t)
        active_targets = {t for st in self._scenarios for t in st.scenario.targets
                          if st.scenario.stages[-1].end > self.tick}
        clash = active_targets & set(scenario.targets)
        if clash:
            raise InjectError(f"devices already under an active scenario: {sorted(clash)}")
        self._scenarios.append(_ScenarioState(scenario=scenario))
        return self

    # -- frame emission helpers ---------------------------------------------

    def _unit(self, device_id: str) -> int:
        try:
            return self._units[device_id]
        except KeyError:
            raise SimError(f"device {device_id!r} has no field-bus unit") from None

    def _frame_event(self, src: str, dst: str, tx: capture.ParsedTransaction,
                     response: bool) -> SimEvent:
        serial_end = dst if dst in self._segment_of else src
        return SimEvent(self.tick, KIND_FRAME, {
            "segment": self._segment_of[serial_end],
            "src": src, "dst": dst, "response": response,
            "raw": capture.encode_frame(tx).hex(),
        })

    def _emit_request(self, events: list, initiator: str, target: str, kind: str,
                      value: Optional[float], scenario_state: Optional[_ScenarioState]) -> None:
        """Emit one transaction: request frame, side effects, status response."""
        unit = self._unit(target)
        if kind == capture.OP_READ_STATUS:
            tx = capture.read_status(unit, status_register(unit), 1)
        elif kind == capture.OP_WRITE_SETPOINT:
            point = self.process.get(target)
            if value is None:
                value = point.setpoint if point else 0.0
            tx = capture.write_setpoint(unit, setpoint_register(unit), scale_value(value))
            if point is not None:
                point.setpoint = value
        else:
            tx = capture.firmware_update(unit, FIRMWARE_REGISTER, 1)
        events.append(self._frame_event(initiator, target, tx, response=False))
        if kind == capture.OP_READ_STATUS:
            self._emit_status(events, target, initiator)

    def _emit_status(self, events: list, device: str, to: str) -> None:
        for st in self._scenarios:
            if device in st.scenario.targets or device in st.faulted:
                if device in st.faulted:
                    return  # crashed device answers nothing
                if stage_at(st.scenario, self.tick) == "cleanup" and self._attack_open(st):
                    acc = st.suppress_acc.get(device, 0.0) + st.scenario.intensity
                    if acc >= 1.0:
                        st.suppress_acc[device] = acc - 1.0
                        return  # masked by the attacker
                    st.suppress_acc[device] = acc
        unit = self._unit(device)
        point = self.process.get(device)
        raw_value = scale_value(point.value) if point is not None else 1
        tx = capture.ParsedTransaction(unit, capture.OP_READ_STATUS,
                                       status_register(unit), raw_value, valid=True,
                                       function_code=capture.FUNCTION_CODES[capture.OP_READ_STATUS])
        events.append(self._frame_event(device, to, tx, response=True))

    # -- stepping -----------------------------------------------------------

    def step(self) -> list[SimEvent]:
        events: list[SimEvent] = []
        self._reach_cache: dict[tuple, bool] = {}

        for st in self._scenarios:
            stage = stage_at(st.scenario, self.tick)
            if stage is not None and stage not in st.entered:
                st.entered.add(stage)
                events.append(SimEvent(self.tick, KIND_STAGE,
                                       {"scenario": st.scenario.id, "stage": stage,
                                        "threat": st.scenario.threat}))

        for entry in self._pending_frames.pop(self.tick, []):
            self._emit_request(events, *entry, scenario_state=None)

        for t in self.templates:
            if (self.tick - t.phase) % t.period == 0 and self.tick >= t.phase:
                delay = self.rng.randint(0, self.jitter) if self.jitter > 0 else 0
                entry = (t.initiator, t.target, t.kind, t.value)
                if delay == 0:
                    self._emit_request(events, *entry, scenario_state=None)
                else:
                    self._pending_frames.setdefault(self.tick + delay, []).append(entry)

        for st in self._scenarios:
            self._apply_scenario(events, st)

        for f in self.flow_templates:
            if (self.tick - f.phase) % f.period == 0 and self.tick >= f.phase:
                size = f.size + (self.rng.randint(-f.size_jitter, f.size_jitter)
                                 if f.size_jitter > 0 else 0)
                if self._reachable_cached(f.src, f.dst):
                    src, dst = self.topology.device(f.src), self.topology.device(f.dst)
                    events.append(SimEvent(self.tick, KIND_FLOW, {
                        "src": src.address, "dst": dst.address,
                        "size": size, "proto": f.proto}))

        for device_id in self.process:
            self._update_point(device_id)
        for st in self._scenarios:
            self._apply_drift(st)
        for device_id, point in self.process.items():
            events.append(SimEvent(self.tick, KIND_PROCESS, {
                "device": device_id, "value": round(point.value, 6),
                "setpoint": round(point.setpoint, 6),
                "breach": point.breach, "unit": point.unit}))

        self.tick += 1
        return events

    def run(self, ticks: int) -> list[SimEvent]:
        out = []
        for _ in range(ticks):
            out.extend(self.step())
        return out

    def _update_point(self, device_id: str) -> None:
        point = self.process[device_id]
        lo, hi = point.bounds
        noise = (self.rng.uniform(-1.0, 1.0) * self.noise_amp * (hi - lo)
                 if self.noise_amp > 0 else 0.0)
        point.value += self.k * (point.setpoint - point.value) + noise

    # -- scenario effects ----------------------------------------------------

    def _reachable_cached(self, src: str, dst: str) -> bool:
        a, b = self.topology.device(src).zone, self.topology.device(dst).zone
        key = (a, b)
        if key not in self._reach_cache:
            self._reach_cache[key] = reachable(self.topology, src, dst)
        return self._reach_cache[key]

    def _attack_open(self, st: _ScenarioState) -> bool:
        """Can the attacker currently reach the first target from the origin?"""
        targets = st.scenario.targets
        if not targets:
            return True
        return self._reachable_cached(st.scenario.origin, targets[0])

    def _external_address(self) -> str:
        for z in self.topology.zones:
            if z.kind.value == "internet":
                devs = self.topology.devices_in_zone(z.id)
                if devs:
                    return devs[0].address
        return "203.0.113.66"

    def _segment_members(self, st: _ScenarioState) -> list[str]:
        segs = {self._segment_of[t] for t in st.scenario.targets if t in self._segment_of}
        members = []
        for seg in sorted(segs):
            members.extend(self.topology.segment(seg).members)
        return members

    def _apply_scenario(self, events: list, st: _ScenarioState) -> None:
        sc = st.scenario
        stage = stage_at(sc, self.tick)
        if stage is None:
            return
        origin = sc.origin
        open_path = self._attack_open(st)

        while st.pending_restores and st.pending_restores[0][0] <= self.tick:
            _, device, value = st.pending_restores.pop(0)
            if open_path:
                self._emit_request(events, origin, device, capture.OP_WRITE_SETPOINT,
                                   value, st)

        if stage == "access":
            # Intrusion observed at the IT boundary: command-and-control flows
            # from an external address, which also read as novel log tokens.
            if self.rng.random() < 0.5 * sc.intensity:
                origin_dev = self.topology.device(origin)
                events.append(SimEvent(self.tick, KIND_FLOW, {
                    "src": self._external_address(), "dst": origin_dev.address,
                    "size": 600 + self.rng.randint(0, 300), "proto": "other"}))
        elif stage == "discovery" and open_path:
            members = self._segment_members(st)
            if members:
                for _ in range(max(1, math.ceil(3 * sc.intensity))):
                    target = members[st.sweep_cursor % len(members)]
                    unit = self._unit(target)
                    addr = (st.sweep_cursor * 3) % 1024
                    tx = capture.read_status(unit, addr, 2)
                    events.append(self._frame_event(origin, target, tx, response=False))
                    self._emit_status(events, target, origin)
                    st.sweep_cursor += 1
        elif stage == "control" and open_path:
            if self.rng.random() < 0.3 * sc.intensity:
                pts = [t for t in sc.targets if t in self.process]
                if pts:
                    target = pts[self.rng.randrange(len(pts))]
                    point = self.process[target]
                    lo, hi = point.bounds
                    margin = 0.02 * (hi - lo)
                    probe = hi - margin if st.sweep_cursor % 2 == 0 else lo + margin
                    st.sweep_cursor += 1
                    st.original_setpoints.setdefault(target, point.setpoint)
                    self._emit_request(events, origin, target, capture.OP_WRITE_SETPOINT,
                                       probe, st)
                    st.pending_restores.append(
                        (self.tick + 2, target, st.original_setpoints[target]))
        elif stage == "damage" and open_path:
            self._apply_damage(events, st)
        elif stage == "cleanup" and open_path:
            if not st.cleanup_started:
                st.cleanup_started = True
                for target in sc.targets:
                    if target in self._units:
                        self._emit_request(events, origin, target,
                                           capture.OP_FIRMWARE_UPDATE, None, st)
            # Status masking itself happens in _emit_status.

    def _apply_damage(self, events: list, st: _ScenarioState) -> None:
        sc = st.scenario
        threat = sc.threat
        first = not st.damage_started
        st.damage_started = True
        reassert = (self.tick % 25 == 0) or first

        def attack_write(target: str, value: float) -> None:
            st.original_setpoints.setdefault(
                target, self.process[target].setpoint if target in self.process else 0.0)
            self._emit_request(events, sc.origin, target, capture.OP_WRITE_SETPOINT,
                               value, st)

        if threat == "setpoint-alteration" and reassert:
            for target in sc.targets:
                point = self.process.get(target)
                if point is None:
                    continue
                lo, hi = point.bounds
                attack_write(target, hi + 0.3 * (hi - lo))
        elif threat == "vent-hood-offline" and reassert:
            for target in sc.targets:
                if target in self.process:
                    attack_write(target, 0.0)  # stop command: drive duty to zero
        elif threat == "negative-pressure-compromised" and reassert:
            for target in sc.targets:
                point = self.process.get(target)
                if point is None:
                    continue
                lo, hi = point.bounds
                attack_write(target, hi + 0.5 * (hi - lo))  # push positive
        elif threat == "overpressurization" and reassert:
            for target in sc.targets:
                point = self.process.get(target)
                if point is None:
                    continue
                lo, hi = point.bounds
                attack_write(target, hi + 0.5 * (hi - lo))
        elif threat == "ups-compromise":
            if first:
                for target in sc.targets:
                    events.append(SimEvent(self.tick, KIND_FAULT,
                                           {"device": target, "reason": "power"}))
            if reassert:
                for target in sc.targets:
                    point = self.process.get(target)
                    if point is None:
                        continue
                    lo, hi = point.bounds
                    attack_write(target, lo - 0.3 * (hi - lo))  # force deep discharge
        elif threat == "data-manipulation":
            for target in sc.targets:
                if self.rng.random() >= sc.intensity:
                    continue
                point = self.process.get(target)
                if point is None:
                    continue
                lo, hi = point.bounds
                base = st.original_setpoints.setdefault(target, point.setpoint)
                span = hi - lo
                delta = self.rng.uniform(-0.3, 0.3) * span * sc.intensity
                forged = min(hi - 0.1 * span, max(lo + 0.1 * span, base + delta))
                attack_write(target, forged)
        elif threat == "unauthorized-access":
            members = self._segment_members(st)
            if members:
                for _ in range(2):
                    target = members[st.sweep_cursor % len(members)]
                    st.sweep_cursor += 1
                    unit = self._unit(target)
                    tx = capture.read_status(unit, status_register(unit), 1)
                    events.append(self._frame_event(sc.origin, target, tx, response=False))
                    self._emit_status(events, target, sc.origin)
            if self.tick % 2 == 0:
                origin_dev = self.topology.device(sc.origin)
                events.append(SimEvent(self.tick, KIND_FLOW, {
                    "src": self._external_address(), "dst": origin_dev.address,
                    "size": 800 + self.rng.randint(0, 200), "proto": "other"}))
        elif threat == "query-storm":
            members = self._segment_members(st)
            count = max(1, math.ceil(len(members) * sc.intensity))
            for i in range(count):
                target = members[i % len(members)]
                unit = self._unit(target)
                tx = capture.read_status(unit, status_register(unit), 1)
                events.append(self._frame_event(sc.origin, target, tx, response=False))
                self._emit_status(events, target, sc.origin)
        elif threat == "active-scan-fault":
            if first:
                for target in sc.targets:
                    st.faulted.add(target)
                    events.append(SimEvent(self.tick, KIND_FAULT,
                                           {"device": target, "reason": "active-scan"}))
            # The scan itself: aggressive reads across the segment.
            members = self._segment_members(st)
            if members:
                for _ in range(3):
                    target = members[st.sweep_cursor % len(members)]
                    st.sweep_cursor += 1
                    unit = self._unit(target)
                    tx = capture.read_status(unit, (st.sweep_cursor * 5) % 1024, 4)
                    events.append(self._frame_event(sc.origin, target, tx, response=False))
                    self._emit_status(events, target, sc.origin)

    def _apply_drift(self, st: _ScenarioState) -> None:
        """chiller-degraded damage: efficiency loss as persistent upward drift."""
        if st.scenario.threat != "chiller-degraded":
            return
        if stage_at(st.scenario, self.tick) != "damage" or not self._attack_open(st):
            return
        for target in st.scenario.targets:
            point = self.process.get(target)
            if point is None:
                continue
            lo, hi = point.bounds
            point.value += 0.6 * self.k * (hi - lo) * st.scenario.intensity


def new_sim(topology: Topology, templates: Sequence[TransactionTemplate], seed: int,
            **config) -> Sim:
    return Sim(topology, templates, seed, **config)


def step(sim: Sim) -> list[SimEvent]:
    return sim.step()


def inject(sim: Sim, scenario: AttackScenario) -> Sim:
    return sim.inject(scenario)
