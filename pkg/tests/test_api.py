"""HTTP service contract: session discovery, snapshots, SSE record stream,
operator commands, annotations, and CSV reporting."""

import json

import pytest
from fastapi.testclient import TestClient

from cyphyeye.service.api import create_app
from cyphyeye.service.pipeline import Session, SessionConfig
from cyphyeye.service.store import canonical_json


@pytest.fixture(scope="module")
def env(xyz_topology):
    config = SessionConfig(seed=5, ticks=60, snapshot_every=16,
                           policy_enabled=False)
    session = Session(xyz_topology, config=config, session_id="alpha")
    session.run(60)
    session.finish()
    registry = {"alpha": session}
    return session, TestClient(create_app(registry))


@pytest.fixture(scope="module")
def two_session_client(xyz_topology):
    registry = {}
    for sid in ("one", "two"):
        s = Session(xyz_topology,
                    config=SessionConfig(seed=9, ticks=8, snapshot_every=100,
                                         policy_enabled=False),
                    session_id=sid)
        s.run(8)
        s.finish()
        registry[sid] = s
    return TestClient(create_app(registry))


# ---------------------------------------------------------------------------
# Discovery and snapshots


def test_sessions_lists_registered_runs(env):
    session, client = env
    body = client.get("/sessions").json()
    assert body == [{"session": "alpha", "tick": 59, "live": False,
                     "records": len(session.store)}]


def test_snapshot_now_matches_session_state(env):
    session, client = env
    body = client.get("/snapshot").json()
    assert canonical_json(body) == canonical_json(session.snapshot_now())
    assert body["tick"] == 59
    assert body["devices"] and body["systems"] and body["traffic"]


def test_snapshot_traffic_rows_mirror_each_other(env):
    _, client = env
    rows = client.get("/snapshot").json()["traffic"]
    table = {(r["src"], r["dst"]): (r["sent"], r["recv"]) for r in rows}
    assert table
    for (src, dst), (sent, recv) in table.items():
        assert table[(dst, src)] == (recv, sent)


def test_snapshot_at_recorded_tick(env):
    session, client = env
    stored = {r.data["tick"]: r.data for r in session.store.snapshot_records()}
    body = client.get("/snapshot", params={"tick": 31}).json()
    assert canonical_json(body) == canonical_json(stored[31])


def test_snapshot_beyond_the_run_is_404(env):
    _, client = env
    assert client.get("/snapshot", params={"tick": 6000}).status_code == 404
    assert client.get("/snapshot", params={"tick": -2}).status_code == 404


def test_unknown_session_is_404(env):
    _, client = env
    assert client.get("/snapshot", params={"session": "ghost"}).status_code == 404


def test_ambiguous_session_is_400(two_session_client):
    assert two_session_client.get("/snapshot").status_code == 400
    ok = two_session_client.get("/snapshot", params={"session": "two"})
    assert ok.status_code == 200 and ok.json()["tick"] == 7


# ---------------------------------------------------------------------------
# Record stream


def parse_sse(text):
    events = []
    for block in text.strip().split("\n\n"):
        lines = dict(line.split(": ", 1) for line in block.splitlines())
        events.append((int(lines["id"]), lines["event"],
                       json.loads(lines["data"])))
    return events


def test_stream_replays_every_record_in_order(env):
    session, client = env
    expected = len(session.store)
    events = parse_sse(client.get("/stream").text)
    assert len(events) == expected
    assert [seq for seq, _, _ in events] == list(range(expected))
    assert events[0][1] == "session-start"
    assert events[-1][1] == "session-end"
    for seq, kind, data in events:
        rec = session.store.record(seq)
        assert (rec.kind, rec.data) == (kind, data["data"])


def test_stream_resumes_from_a_cursor(env):
    session, client = env
    start = len(session.store) - 3
    events = parse_sse(client.get("/stream",
                                  params={"from_seq": start}).text)
    assert [seq for seq, _, _ in events] == [start, start + 1, start + 2]


# ---------------------------------------------------------------------------
# Commands


def test_quarantine_command_shows_in_next_snapshot(env):
    _, client = env
    r = client.post("/command", json={"type": "quarantine",
                                      "pair": ["corporate", "dmz"]})
    assert r.status_code == 200 and r.json()["status"] == "applied"
    rules = client.get("/snapshot").json()["active_rules"]
    mine = [x for x in rules if x["origin"] == "operator"]
    assert {(x["src"], x["dst"], x["allow"]) for x in mine} == {
        ("corporate", "dmz", False), ("dmz", "corporate", False)}

    client.post("/command", json={"type": "release",
                                  "pair": ["corporate", "dmz"]})
    rules = client.get("/snapshot").json()["active_rules"]
    mine = [x for x in rules if x["origin"] == "operator"]
    assert {(x["src"], x["dst"], x["allow"]) for x in mine} == {
        ("corporate", "dmz", True), ("dmz", "corporate", True)}


def test_unknown_command_type_is_400(env):
    _, client = env
    r = client.post("/command", json={"type": "reboot-the-plant"})
    assert r.status_code == 400


def test_command_with_unknown_zone_is_404(env):
    _, client = env
    r = client.post("/command", json={"type": "quarantine",
                                      "pair": ["corporate", "narnia"]})
    assert r.status_code == 404


def test_non_object_command_body_is_400(env):
    _, client = env
    r = client.post("/command", json=["quarantine"])
    assert r.status_code == 400


def test_acknowledge_unknown_alert_is_404(env):
    _, client = env
    r = client.post("/command", json={"type": "acknowledge",
                                      "alert": "alert-404"})
    assert r.status_code == 404


# ---------------------------------------------------------------------------
# Annotations


def test_annotation_round_trip_and_subject_filter(env):
    _, client = env
    r = client.post("/annotations", json={"subject": "fb-bus",
                                          "text": "pump hums at 50Hz",
                                          "author": "op-2"})
    assert r.status_code == 200
    seq = r.json()["seq"]
    client.post("/annotations", json={"subject": "vp-1", "text": "checked"})

    notes = client.get("/annotations").json()
    assert {n["subject"] for n in notes} >= {"fb-bus", "vp-1"}
    mine = client.get("/annotations", params={"subject": "fb-bus"}).json()
    assert len(mine) == 1
    assert mine[0]["text"] == "pump hums at 50Hz"
    assert mine[0]["author"] == "op-2"
    assert mine[0]["seq"] == seq
    # The snapshot carries the same annotation list.
    snap_notes = client.get("/snapshot").json()["annotations"]
    assert mine[0] in snap_notes


def test_annotation_on_unknown_subject_is_404(env):
    _, client = env
    r = client.post("/annotations", json={"subject": "ghost", "text": "?"})
    assert r.status_code == 404


# ---------------------------------------------------------------------------
# Reports


def test_report_returns_csv(env):
    _, client = env
    r = client.get("/report", params={"from": 30, "to": 60})
    assert r.status_code == 200
    assert r.headers["content-type"].startswith("text/csv")
    lines = r.text.strip().splitlines()
    assert lines[0] == "dst,prev_bytes,cur_bytes,delta_pct,flagged"
    assert len(lines) > 1


def test_report_window_validation(env):
    _, client = env
    assert client.get("/report",
                      params={"from": 10, "to": 10}).status_code == 400
    assert client.get("/report",
                      params={"from": 10, "to": 25}).status_code == 400
    assert client.get("/report",
                      params={"from": 30, "to": 60,
                              "threshold": 1.5}).status_code == 400


# ---------------------------------------------------------------------------
# Published schema contract


def _published_validator(name):
    """Build a validator for docs/api/<name> with sibling refs resolvable."""
    import jsonschema
    from referencing import Registry, Resource
    from tests.conftest import ROOT

    schema_dir = ROOT / "docs" / "api"
    resources = {}
    for path in sorted(schema_dir.glob("*.json")):
        resources[path.name] = Resource.from_contents(
            json.loads(path.read_text()))
    registry = Registry().with_resources(resources.items())
    return jsonschema.Draft7Validator(
        json.loads((schema_dir / name).read_text()), registry=registry)


def test_snapshot_matches_published_schema(env):
    validator = _published_validator("snapshot.json")
    session, client = env
    # Populate the optional branches so their sub-schemas are exercised:
    # operator rules from a quarantine, and a note hitting the $ref'd
    # annotation schema.
    session.apply_command({"type": "quarantine", "pair": ["dmz", "facilities"]})
    session.apply_command({"type": "annotate", "subject": "bms-server",
                           "text": "schema contract check"})
    body = client.get("/snapshot").json()
    assert body["active_rules"] and body["annotations"]
    validator.validate(body)
    session.apply_command({"type": "release", "pair": ["dmz", "facilities"]})
    validator.validate(client.get("/snapshot").json())


def test_stream_deltas_match_published_schema(env):
    validator = _published_validator("stream-delta.json")
    _, client = env
    with client.stream("GET", "/stream") as response:
        text = "".join(response.iter_text())
    blocks = [b for b in text.split("\n\n") if b.strip()]
    assert len(blocks) > 10
    for block in blocks[:50] + blocks[-5:]:
        data_line = next(l for l in block.split("\n") if l.startswith("data:"))
        validator.validate(json.loads(data_line[5:].strip()))
