"""End-to-end session pipeline.

One :class:`Session` owns a simulation, passive taps, the scoring models, the
composite tracker per monitored system, and the quarantine policy.  Every
observable fact — sim events, rendered log lines, alerts, anomaly states,
rule changes, operator commands, annotations — is appended to an
:class:`~cyphyeye.service.store.EventStore` as it happens.  Dashboard state is
never computed ad hoc: a :class:`SnapshotReducer` folds the record stream, and
periodic snapshot records freeze its output so that any reader (a replay
verifier, a crash-recovered service, a UI) can reproduce exactly the same
state from the log alone.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterator, Mapping, Optional, Sequence, Union

from cyphyeye import capture
from cyphyeye.capture import FlowEvent, FlowRecord, LogEvent
from cyphyeye.plantsim import (
    KIND_FLOW, KIND_FRAME, Sim, default_templates,
)
from cyphyeye.scenarios import AttackScenario, load_scenario
from cyphyeye.topology import (
    FirewallRule, RuleOrigin, Topology, build_topology, set_rule,
)
from cyphyeye.analytics import (
    AnalyticsConfig, AutoencoderModel, CompositeTracker, LogScoreModel,
    QuarantinePolicy, RuleTablePolicyHandle, WindowBuilder, behavioral_anomaly,
    build_windows, classify_flow, load_autoencoder, load_log_model,
    save_autoencoder, save_log_model, score_line, tick_observations,
    traffic_delta_report, train_autoencoder, train_log_model, write_report_csv,
)
from cyphyeye.service.store import EventStore, Record, canonical_json


#: Signature rules applied to every rendered line unless overridden.
DEFAULT_RULESET = (
    {"id": "sig-firmware-push", "match": {"op": "firmware-update"}, "severity": "high"},
    {"id": "sig-frame-corrupt", "match": {"valid": "false"}, "severity": "medium"},
)


@dataclass(frozen=True)
class SessionConfig:
    """Run-time knobs for one pipeline session."""

    seed: int = 1
    ticks: int = 600
    snapshot_every: int = 100
    tap_healthy: bool = True
    score_sample_per_tick: int = 2  # rendered lines scored per tick
    risk_span: int = 100            # risk rate = mean over this many recent labels
    policy_enabled: bool = True
    quarantine_pair: tuple = ("dmz", "facilities")
    lag_gain: float = 0.1
    noise_amp: float = 0.01
    jitter: int = 1
    ruleset: tuple = DEFAULT_RULESET
    analytics: AnalyticsConfig = field(default_factory=AnalyticsConfig)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["quarantine_pair"] = list(self.quarantine_pair)
        doc["ruleset"] = [dict(r) for r in self.ruleset]
        return doc


# ---------------------------------------------------------------------------
# Model bundle


@dataclass
class ModelBundle:
    """The two trained detectors a session scores with."""

    log_model: LogScoreModel
    autoencoder: AutoencoderModel

    def save(self, directory: Union[str, Path]) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        save_log_model(self.log_model, directory / "log-model.ckpt")
        save_autoencoder(self.autoencoder, directory / "autoencoder.ckpt")
        return directory

    @classmethod
    def load(cls, directory: Union[str, Path]) -> "ModelBundle":
        directory = Path(directory)
        return cls(
            log_model=load_log_model(directory / "log-model.ckpt"),
            autoencoder=load_autoencoder(directory / "autoencoder.ckpt"),
        )


def _address_map(topology: Topology) -> dict[str, str]:
    return {d.id: d.address for d in topology.devices}


def _render_tick_lines(events, topology: Topology, addr: Mapping[str, str],
                       tap_healthy: bool = True) -> list[tuple[str, LogEvent, dict]]:
    """Render one tick's frame and flow events into log lines.

    Returns (channel, LogEvent, payload) triples in emission order: serial
    lines first (as observed by taps), then flow lines.  With an unhealthy tap
    the serial lines vanish — observation is passive and fail-closed.
    """
    out = []
    for ev in events:
        if ev.kind == KIND_FRAME:
            p = ev.payload
            enc = capture.tap_observe(bytes.fromhex(p["raw"]), f"tap-{p['segment']}",
                                      p["segment"], ev.tick, tap_healthy)
            if enc is None:
                continue
            tx = capture.decode_frame(enc.raw)
            le = capture.render_log(tx, tick=ev.tick,
                                    src=addr.get(p["src"], p["src"]),
                                    dst=addr.get(p["dst"], p["dst"]))
            out.append(("serial", le, p))
    for ev in events:
        if ev.kind == KIND_FLOW:
            p = ev.payload
            fr = FlowRecord(src=p["src"], dst=p["dst"], start_tick=ev.tick,
                            end_tick=ev.tick, bytes_sent=p["size"],
                            bytes_received=0, protocol_tag=p["proto"])
            out.append(("flow", capture.render_log(fr), p))
    return out


def render_session_lines(events, topology: Topology) -> list[str]:
    """All log lines a healthy deployment would record for a batch of events."""
    addr = _address_map(topology)
    lines = []
    for _, batch in _group_by_tick(events):
        lines.extend(le.line for _, le, _ in _render_tick_lines(batch, topology, addr))
    return lines


def training_corpus(events, topology: Topology) -> list[str]:
    """One rendered line per tick, rotating through each tick's line types.

    Sampling at most one line per tick keeps per-tick tokens (tick=N) below
    the vocabulary's min_count, so they are char-spelled during training just
    as they will be when scoring live ticks the corpus never saw.  Taking a
    different index each tick still covers reads, writes, responses and flows.
    """
    addr = _address_map(topology)
    corpus = []
    for t, batch in _group_by_tick(events):
        lines = [le.line for _, le, _ in _render_tick_lines(batch, topology, addr)]
        if lines:
            corpus.append(lines[t % len(lines)])
    return corpus


def _group_by_tick(events) -> Iterator[tuple[int, list]]:
    batch: list = []
    current = None
    for ev in events:
        if current is not None and ev.tick != current:
            yield current, batch
            batch = []
        current = ev.tick
        batch.append(ev)
    if batch:
        yield current, batch


def train_models(topology: Topology, config: AnalyticsConfig = AnalyticsConfig(), *,
                 seeds: Sequence[int] = (101, 102, 103, 104, 105),
                 ticks: int = 400, max_lines: int = 1200, seed: int = 7) -> ModelBundle:
    """Train both detectors on clean runs of the given plant.

    The text corpus comes from the first seed's run; behavior windows pool
    across all seeds so the autoencoder sees several noise realisations of
    the same stable plant.  Accepts a full ``SessionConfig`` too, using its
    analytics section.
    """
    config = getattr(config, "analytics", config)
    all_windows = []
    corpus: list[str] = []
    for i, s in enumerate(seeds):
        sim = Sim(topology, default_templates(topology), s)
        events = sim.run(ticks)
        for seg_windows in build_windows(events, topology, config.window_ticks).values():
            all_windows.extend(seg_windows)
        if i == 0:
            # One seed only: pooling seeds would repeat each tick=N token
            # once per seed, promoting them into the vocabulary again.
            corpus = training_corpus(events, topology)
    if len(corpus) > max_lines:
        stride = len(corpus) / max_lines
        corpus = [corpus[int(j * stride)] for j in range(max_lines)]
    log_model = train_log_model(corpus, epochs=config.log_epochs, seed=seed,
                                embed_dim=config.embed_dim, hidden_dim=config.hidden_dim,
                                lr=config.log_lr, min_count=config.min_count)
    autoencoder = train_autoencoder(all_windows, epochs=config.ae_epochs, seed=seed,
                                    hidden_dim=config.ae_hidden,
                                    bottleneck=config.ae_bottleneck, lr=config.ae_lr)
    return ModelBundle(log_model=log_model, autoencoder=autoencoder)


# ---------------------------------------------------------------------------
# Snapshot reducer


class SnapshotReducer:
    """Pure fold from the record stream to dashboard state.

    Applying the same records in the same order always yields the same
    snapshot, which is what makes stored snapshots verifiable and crash
    recovery exact.  Snapshot records themselves are ignored by ``apply`` so
    a reader can fold a full stream without special-casing.
    """

    def __init__(self) -> None:
        self.devices: list[dict] = []
        self.tick = 0
        self.systems: dict[str, dict] = {}
        self.traffic: dict[tuple[str, str], int] = {}
        self.alerts: dict[str, dict] = {}
        self.rules: dict[tuple[str, str, str], dict] = {}
        self.annotations: list[dict] = []

    # -- folding ---------------------------------------------------------

    def apply(self, record: Record) -> None:
        if record.kind == "snapshot":
            return
        self.tick = max(self.tick, record.tick)
        data = record.data
        if record.kind == "session-start":
            self.devices = list(data.get("devices", []))
        elif record.kind == "sim" and data.get("kind") == KIND_FLOW:
            p = data["payload"]
            key = (p["src"], p["dst"])
            self.traffic[key] = self.traffic.get(key, 0) + int(p["size"])
        elif record.kind == "anomaly":
            self.systems[data["system"]] = dict(data, tick=record.tick)
        elif record.kind == "alert":
            self.alerts[data["id"]] = dict(data, tick=record.tick, acked=False)
        elif record.kind == "command" and data.get("type") == "acknowledge":
            hit = self.alerts.get(data.get("alert", ""))
            if hit is not None:
                hit["acked"] = True
        elif record.kind == "rule-change":
            if data["action"] == "set":
                self.rules[(data["src"], data["dst"], data["origin"])] = {
                    "id": data["rule"], "allow": bool(data["allow"]),
                }
            elif data["action"] == "clear-origin":
                origin = data["origin"]
                for key in [k for k in self.rules if k[2] == origin]:
                    del self.rules[key]
        elif record.kind == "annotation":
            self.annotations.append(dict(data, tick=record.tick, seq=record.seq))

    # -- projection ------------------------------------------------------

    def snapshot(self, tick: int) -> dict:
        pairs = set(self.traffic)
        pairs |= {(b, a) for a, b in self.traffic}
        traffic_rows = []
        partners: dict[str, list] = {}
        for src, dst in sorted(pairs):
            sent = self.traffic.get((src, dst), 0)
            recv = self.traffic.get((dst, src), 0)
            if sent == 0 and recv == 0:
                continue
            traffic_rows.append({"src": src, "dst": dst, "sent": sent, "recv": recv})
            partners.setdefault(src, []).append(
                {"partner": dst, "sent": sent, "recv": recv})
        return {
            "tick": tick,
            "devices": self.devices,
            "systems": [self.systems[k] for k in sorted(self.systems)],
            "traffic": traffic_rows,
            "partners": {k: partners[k] for k in sorted(partners)},
            "active_rules": [
                {"src": k[0], "dst": k[1], "origin": k[2],
                 "id": v["id"], "allow": v["allow"]}
                for k, v in sorted(self.rules.items())
            ],
            "pending_alerts": sorted(
                ({k: v for k, v in a.items() if k != "acked"}
                 for a in self.alerts.values() if not a["acked"]),
                key=lambda a: (a["tick"], a["id"]),
            ),
            "annotations": list(self.annotations),
        }

    @classmethod
    def restore(cls, snapshot: Mapping) -> "SnapshotReducer":
        """Rebuild reducer state from a stored snapshot record's data."""
        r = cls()
        r.devices = list(snapshot.get("devices", []))
        r.tick = int(snapshot["tick"])
        r.systems = {s["system"]: dict(s) for s in snapshot.get("systems", [])}
        for row in snapshot.get("traffic", []):
            if row["sent"] > 0:
                r.traffic[(row["src"], row["dst"])] = int(row["sent"])
        for a in snapshot.get("pending_alerts", []):
            r.alerts[a["id"]] = dict(a, acked=False)
        for rule in snapshot.get("active_rules", []):
            r.rules[(rule["src"], rule["dst"], rule["origin"])] = {
                "id": rule["id"], "allow": rule["allow"],
            }
        r.annotations = [dict(a) for a in snapshot.get("annotations", [])]
        return r


def replay_session(store: EventStore) -> tuple[int, list[int]]:
    """Re-fold a store and verify every stored snapshot byte-for-byte.

    Returns (snapshots checked, seqs of mismatching snapshots).  Replay never
    re-runs the simulation or re-scores a line: everything needed is in the
    records.
    """
    reducer = SnapshotReducer()
    checked = 0
    mismatches = []
    for rec in store.records():
        if rec.kind == "snapshot":
            checked += 1
            expected = canonical_json(rec.data)
            actual = canonical_json(reducer.snapshot(rec.data["tick"]))
            if actual != expected:
                mismatches.append(rec.seq)
        else:
            reducer.apply(rec)
    return checked, mismatches


def recover_reducer(store: EventStore) -> SnapshotReducer:
    """State after a crash: latest stored snapshot plus a fold of the tail."""
    snap = store.latest_snapshot()
    if snap is None:
        reducer = SnapshotReducer()
        start = 0
    else:
        reducer = SnapshotReducer.restore(snap.data)
        start = snap.seq + 1
    for rec in store.records(start):
        reducer.apply(rec)
    return reducer


# ---------------------------------------------------------------------------
# Session


class Session:
    """One live (or finished) pipeline run over a plant model."""

    def __init__(self, topology: Topology, scenarios: Sequence[AttackScenario] = (), *,
                 config: SessionConfig = SessionConfig(),
                 models: Optional[ModelBundle] = None,
                 store: Optional[EventStore] = None,
                 store_path: Optional[Union[str, Path]] = None,
                 session_id: str = "session-1") -> None:
        self.id = session_id
        self.config = config
        self.topology = topology  # mutable slot: rules change during the run
        self.models = models
        self.store = store if store is not None else EventStore(store_path)
        self.reducer = SnapshotReducer()
        self.live = True
        self._lock = threading.RLock()
        self._addr = _address_map(topology)
        self._ruleset = capture.load_ruleset([dict(r) for r in config.ruleset])
        self._monitored = frozenset(
            d.address for d in topology.devices if d.zone == "facilities")

        self.sim = Sim(topology, default_templates(topology), config.seed,
                       k=config.lag_gain, noise_amp=config.noise_amp,
                       jitter=config.jitter)
        for sc in scenarios:
            self.sim.inject(sc)

        acfg = config.analytics
        self._builders = {s.id: WindowBuilder(acfg.window_ticks) for s in topology.segments}
        self._trackers = {s.id: CompositeTracker(s.id, acfg.composite())
                          for s in topology.segments}
        self._behav = {s.id: 0.0 for s in topology.segments}
        self._labels: deque = deque(maxlen=config.risk_span)

        self.policy = (QuarantinePolicy(config.quarantine_pair, acfg.policy(),
                                        seed=config.seed + 1)
                       if config.policy_enabled else None)
        self._handle = RuleTablePolicyHandle(self, on_change=self._on_policy_change)

        self._append("session-start", {
            "session": self.id,
            "config": config.to_dict(),
            "devices": [
                {"id": d.id, "address": d.address, "zone": d.zone,
                 "class": d.cls.value, "segment": d.segment, "x": d.x, "y": d.y}
                for d in sorted(topology.devices, key=lambda d: d.id)
            ],
            "scenarios": [sc.id for sc in scenarios],
        }, tick=0)

    # -- store plumbing ----------------------------------------------------

    def _append(self, kind: str, data: dict, tick: Optional[int] = None) -> Record:
        rec = self.store.append(self.sim.tick if tick is None else tick, kind, data)
        self.reducer.apply(rec)
        return rec

    def _on_policy_change(self, action: str, pair: tuple) -> None:
        # The handle already swapped self.topology; mirror it into the sim and
        # record what changed so replay sees the same rule table.
        self.sim.topology = self.topology
        if action == "quarantine":
            a, b = pair
            for src, dst in ((a, b), (b, a)):
                rule = self.topology.effective_rule(src, dst)
                self._append("rule-change", {
                    "action": "set", "src": src, "dst": dst,
                    "allow": False, "origin": "policy", "rule": rule.id,
                })
        else:
            self._append("rule-change", {"action": "clear-origin", "origin": "policy"})

    # -- stepping ------------------------------------------------------------

    def step(self) -> int:
        """Advance one tick through the full pipeline; returns the tick run."""
        with self._lock:
            t = self.sim.tick
            events = self.sim.step()
            for ev in events:
                self._append("sim", {"kind": ev.kind, "payload": ev.payload}, tick=t)

            rendered = _render_tick_lines(events, self.topology, self._addr,
                                          self.config.tap_healthy)

            log_events = [le for _, le, _ in rendered]
            alerts = capture.match_rules(log_events, self._ruleset)
            alerts_by_tick = list(alerts)
            for alert in alerts:
                alert_id = f"alert-{self.store.next_seq()}"
                self._append("alert", {
                    "id": alert_id, "rule": alert.rule_id,
                    "severity": alert.severity, "subject": alert.subject,
                }, tick=t)

            budget = self.config.score_sample_per_tick if self.models else 0
            n = len(rendered)
            if budget <= 0 or n == 0:
                picks: set[int] = set()
            elif budget >= n:
                picks = set(range(n))
            else:
                # Rotate a uniformly spaced sample through the tick's lines so
                # every position — template polls, attack frames, rare flows —
                # is scored at the rate it actually occurs.
                base = (t * 13) % n
                picks = {(base + (j * n) // budget) % n for j in range(budget)}
            for idx, (channel, le, payload) in enumerate(rendered):
                data: dict = {"line": le.line, "source": le.source, "channel": channel}
                if idx in picks:
                    if channel == "serial":
                        s = score_line(self.models.log_model, le.line)
                        label = ("high" if s > self.config.analytics.theta_risk
                                 else "low")
                    else:
                        sink: list = []
                        fr = FlowRecord(src=payload["src"], dst=payload["dst"],
                                        start_tick=t, end_tick=t,
                                        bytes_sent=payload["size"], bytes_received=0,
                                        protocol_tag=payload["proto"])
                        rl = classify_flow(
                            self.models.log_model, fr, alerts_by_tick,
                            theta_risk=self.config.analytics.theta_risk,
                            monitored_addresses=self._monitored, context_sink=sink)
                        s, label = rl.score, rl.label
                        for ctx in sink:
                            self._append("context", ctx, tick=t)
                    data["score"] = round(float(s), 9)
                    data["risk"] = label
                    self._labels.append(label)
                self._append("log", data, tick=t)

            risk_rate = (sum(1 for x in self._labels if x == "high") / len(self._labels)
                         if self._labels else 0.0)

            obs = tick_observations(events, self.topology)
            for seg_id, ob in obs.items():
                window = self._builders[seg_id].push(ob)
                if window is not None and self.models is not None:
                    self._behav[seg_id] = float(
                        behavioral_anomaly(self.models.autoencoder, window))

            level_max = 0.0
            for seg_id in sorted(self._trackers):
                state = self._trackers[seg_id].push(self._behav[seg_id], risk_rate)
                level_max = max(level_max, state.level)
                self._append("anomaly", state.to_dict(), tick=t)

            if self.policy is not None:
                self.policy.step(level_max, risk_rate, self._handle)

            if (t + 1) % self.config.snapshot_every == 0:
                self._append("snapshot", self.reducer.snapshot(t), tick=t)
            return t

    def run(self, ticks: Optional[int] = None) -> "Session":
        for _ in range(self.config.ticks if ticks is None else ticks):
            self.step()
        return self

    def finish(self) -> None:
        with self._lock:
            if self.live:
                self._append("session-end", {})
                self.live = False
                self.store.flush()

    # -- operator surface ----------------------------------------------------

    @property
    def last_tick(self) -> int:
        """Most recently completed tick (-1 before the first step)."""
        return self.sim.tick - 1

    def snapshot_now(self) -> dict:
        with self._lock:
            return self.reducer.snapshot(max(self.last_tick, 0))

    def snapshot_at(self, tick: int) -> Optional[dict]:
        """State as of the end of `tick`, re-folded from the record stream."""
        with self._lock:
            if tick < 0 or tick > max(self.last_tick, 0):
                return None
            reducer = SnapshotReducer()
            for rec in self.store.records():
                if rec.kind != "snapshot" and rec.tick <= tick:
                    reducer.apply(rec)
            return reducer.snapshot(tick)

    def apply_command(self, command: Mapping, author: str = "operator") -> dict:
        """Validate, log, and apply one operator command.

        The command record always lands before any record describing its
        effect, so replay observes cause before consequence.
        """
        with self._lock:
            ctype = command.get("type")
            if ctype in ("quarantine", "release"):
                pair = command.get("pair")
                if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                    raise ValueError("quarantine/release needs a [src, dst] pair")
                a, b = pair
                known_zones = {z.id for z in self.topology.zones}
                if a not in known_zones or b not in known_zones:
                    raise KeyError(f"unknown zone in pair {pair!r}")
                self._append("command", {"type": ctype, "author": author,
                                         "pair": [a, b]})
                allow = ctype == "release"
                for src, dst in ((a, b), (b, a)):
                    rid = f"operator-{self.store.next_seq()}"
                    self.topology = set_rule(self.topology, FirewallRule(
                        id=rid, src_zone=src, dst_zone=dst, allow=allow,
                        origin=RuleOrigin.OPERATOR))
                    self.sim.topology = self.topology
                    self._append("rule-change", {
                        "action": "set", "src": src, "dst": dst,
                        "allow": allow, "origin": "operator", "rule": rid,
                    })
                return {"status": "applied", "type": ctype, "pair": [a, b],
                        "tick": self.sim.tick}
            if ctype == "annotate":
                subject = command.get("subject", "")
                known = ({d.id for d in self.topology.devices}
                         | {s.id for s in self.topology.segments}
                         | {z.id for z in self.topology.zones})
                if subject not in known:
                    raise KeyError(f"unknown subject {subject!r}")
                text = str(command.get("text", ""))
                self._append("command", {"type": "annotate", "author": author,
                                         "subject": subject})
                rec = self._append("annotation", {"subject": subject,
                                                  "author": author, "text": text})
                return {"status": "applied", "type": "annotate", "seq": rec.seq,
                        "tick": self.sim.tick}
            if ctype == "acknowledge":
                alert_id = command.get("alert", "")
                if alert_id not in self.reducer.alerts:
                    raise KeyError(f"unknown alert {alert_id!r}")
                self._append("command", {"type": "acknowledge", "author": author,
                                         "alert": alert_id})
                return {"status": "applied", "type": "acknowledge",
                        "alert": alert_id, "tick": self.sim.tick}
            raise ValueError(f"unknown command type {ctype!r}")

    # -- reporting -------------------------------------------------------

    def flow_events(self, start: int, stop: int) -> list[FlowEvent]:
        """Flow events recorded in [start, stop), rebuilt from the store."""
        out = []
        for rec in self.store.records():
            if (rec.kind == "sim" and rec.data.get("kind") == KIND_FLOW
                    and start <= rec.tick < stop):
                p = rec.data["payload"]
                out.append(FlowEvent(tick=rec.tick, src=p["src"], dst=p["dst"],
                                     size=p["size"], protocol_tag=p["proto"]))
        return out

    def weekly_report(self, week_a: tuple[int, int], week_b: tuple[int, int],
                      threshold: float = 0.2):
        """Destination-level traffic deltas between two tick windows."""
        def totals(span):
            start, stop = span
            events = self.flow_events(start, stop)
            return capture.aggregate_flows(events, max(stop - start, 1))
        return traffic_delta_report(totals(week_a), totals(week_b), threshold)


# ---------------------------------------------------------------------------
# Module-level session registry and convenience entry points


SESSIONS: dict[str, Session] = {}


def run_pipeline(topology_spec, scenario_list: Sequence = (), config: SessionConfig = SessionConfig(), *,
                 models: Optional[ModelBundle] = None,
                 store_path: Optional[Union[str, Path]] = None,
                 session_id: Optional[str] = None) -> Session:
    """Build a session, run it to completion, and register it for the API."""
    topology = topology_spec if isinstance(topology_spec, Topology) else build_topology(topology_spec)
    scenarios = [sc if isinstance(sc, AttackScenario) else load_scenario(sc)
                 for sc in scenario_list]
    sid = session_id or f"session-{len(SESSIONS) + 1}"
    session = Session(topology, scenarios, config=config, models=models,
                      store_path=store_path, session_id=sid)
    SESSIONS[sid] = session
    session.run()
    session.finish()
    return session


def get_snapshot(session_id: str, tick: Optional[int] = None) -> dict:
    session = SESSIONS[session_id]
    if tick is None:
        return session.snapshot_now()
    snap = session.snapshot_at(tick)
    if snap is None:
        raise KeyError(f"tick {tick} is outside the recorded session")
    return snap


def stream_deltas(session_id: str, from_seq: int = 0,
                  poll_interval: float = 0.05) -> Iterator[Record]:
    """Yield records in order; blocks on a live session until it finishes."""
    session = SESSIONS[session_id]
    cursor = from_seq
    while True:
        progressed = False
        for rec in session.store.records(cursor):
            cursor = rec.seq + 1
            progressed = True
            yield rec
        if not session.live:
            return
        if not progressed:
            time.sleep(poll_interval)


def operator_command(session_id: str, command: Mapping, author: str = "operator") -> dict:
    return SESSIONS[session_id].apply_command(command, author=author)


def weekly_report(session_id: str, week_a: tuple[int, int], week_b: tuple[int, int],
                  out_path: Optional[Union[str, Path]] = None, threshold: float = 0.2):
    rows = SESSIONS[session_id].weekly_report(week_a, week_b, threshold)
    if out_path is not None:
        write_report_csv(rows, out_path)
    return rows
