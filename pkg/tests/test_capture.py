"""Observation-plane contract: CRC and frame codec, tap fail-closed shape,
capture-file round-trip, log rendering, flow aggregation, signature rules."""

import random

import pytest
from hypothesis import given, strategies as st

from cyphyeye.capture import (
    Alert,
    CaptureFormatError,
    CaptureWriter,
    FlowEvent,
    LogEvent,
    MalformedFrameError,
    RulesetError,
    aggregate_flows,
    crc16,
    decode_frame,
    encode_frame,
    firmware_update,
    load_ruleset,
    match_rules,
    parse_log_line,
    read_capture,
    read_status,
    render_log,
    tap_observe,
    write_setpoint,
)

MAKERS = (read_status, write_setpoint, firmware_update)


def seeded_frames(seed: int, n: int) -> list[bytes]:
    rng = random.Random(seed)
    return [
        encode_frame(rng.choice(MAKERS)(rng.randrange(1, 248),
                                        rng.randrange(0, 65536),
                                        rng.randrange(0, 65536)))
        for _ in range(n)
    ]


# ---------------------------------------------------------------------------
# CRC and codec


def test_crc_known_vectors():
    # Classic reference request frame and the standard check string.
    assert crc16(bytes.fromhex("1103006B0003")) == 0x8776
    assert crc16(b"123456789") == 0x4B37


def test_encode_reference_frame():
    raw = encode_frame(read_status(0x11, 0x006B, 3))
    assert raw == bytes.fromhex("1103006B0003") + bytes([0x76, 0x87])


def test_round_trip_thousand_seeded_transactions():
    rng = random.Random(99)
    for _ in range(1000):
        tx = rng.choice(MAKERS)(rng.randrange(1, 248), rng.randrange(0, 65536),
                                rng.randrange(0, 65536))
        assert decode_frame(encode_frame(tx)) == tx


@given(unit=st.integers(0, 255), addr=st.integers(0, 0xFFFF),
       val=st.integers(0, 0xFFFF), maker=st.sampled_from(MAKERS))
def test_round_trip_property(unit, addr, val, maker):
    tx = maker(unit, addr, val)
    back = decode_frame(encode_frame(tx))
    assert back == tx and back.valid


def test_every_single_bit_flip_detected():
    for raw in seeded_frames(seed=7, n=5):
        for bit in range(len(raw) * 8):
            corrupted = bytearray(raw)
            corrupted[bit // 8] ^= 1 << (bit % 8)
            assert decode_frame(bytes(corrupted)).valid is False


def test_every_differing_byte_swap_detected():
    # Frozen corpus: seed 2024, 60 frames, 1673 effective swaps.
    checked = 0
    for raw in seeded_frames(seed=2024, n=60):
        for i in range(len(raw)):
            for j in range(i + 1, len(raw)):
                if raw[i] == raw[j]:
                    continue
                swapped = bytearray(raw)
                swapped[i], swapped[j] = swapped[j], swapped[i]
                checked += 1
                assert decode_frame(bytes(swapped)).valid is False
    assert checked == 1673


def test_corrupt_frame_parses_to_invalid_without_semantics():
    raw = bytearray(encode_frame(write_setpoint(5, 40001, 72)))
    raw[3] ^= 0xFF
    tx = decode_frame(bytes(raw))
    assert tx.valid is False
    assert tx.op is None and tx.address is None and tx.value is None


def test_short_frame_rejected():
    with pytest.raises(MalformedFrameError):
        decode_frame(b"\x01\x03\xff")


def test_unknown_function_code_survives_round_trip():
    body = bytes([9, 0x2B, 1, 2, 3])
    raw = body + crc16(body).to_bytes(2, "little")
    tx = decode_frame(raw)
    assert tx.valid and tx.op == "unknown" and tx.function_code == 0x2B
    assert encode_frame(tx) == raw


# ---------------------------------------------------------------------------
# Tap


def test_healthy_tap_copies_bytes():
    raw = encode_frame(read_status(2, 8))
    enc = tap_observe(raw, "tap-1", "fb-bus", tick=5, healthy=True)
    assert enc is not None and enc.raw == raw
    assert (enc.tap_id, enc.segment_id, enc.tick) == ("tap-1", "fb-bus", 5)


def test_failed_tap_emits_nothing():
    raw = encode_frame(read_status(2, 8))
    assert tap_observe(raw, "tap-1", "fb-bus", tick=5, healthy=False) is None


# ---------------------------------------------------------------------------
# Capture file


def test_capture_file_round_trip(tmp_path):
    frames = seeded_frames(seed=3, n=10)
    path = tmp_path / "session.cap"
    with CaptureWriter(path, tap_ids=["tap-1", "tap-2"],
                       segment_ids=["fb-bus", "fb-star"]) as w:
        for i, raw in enumerate(frames):
            enc = tap_observe(raw, f"tap-{i % 2 + 1}",
                              "fb-bus" if i % 2 == 0 else "fb-star", tick=i)
            w.write(enc)
    back = read_capture(path)
    assert [(e.tap_id, e.segment_id, e.tick, e.raw) for e in back] == [
        (f"tap-{i % 2 + 1}", "fb-bus" if i % 2 == 0 else "fb-star", i, raw)
        for i, raw in enumerate(frames)
    ]


def test_capture_file_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.cap"
    path.write_bytes(b"NOPE" + b"\x00" * 20)
    with pytest.raises(CaptureFormatError):
        read_capture(path)


# ---------------------------------------------------------------------------
# Log rendering


def test_render_log_fixed_key_order():
    tx = write_setpoint(5, 40001, 72)
    line = render_log(tx, tick=9, src="nac-1", dst="vav-1").line
    assert line == "tick=9 src=nac-1 dst=vav-1 op=write-setpoint addr=40001 val=72 valid=true"


def test_render_log_deterministic():
    tx = read_status(3, 17, 2)
    a = render_log(tx, tick=1, src="a", dst="b").line
    b = render_log(tx, tick=1, src="a", dst="b").line
    assert a == b


def test_render_log_invalid_frame_has_no_value_key():
    raw = bytearray(encode_frame(write_setpoint(5, 40001, 72)))
    raw[2] ^= 0x01
    line = render_log(decode_frame(bytes(raw)), tick=4, src="x", dst="y").line
    assert "valid=false" in line and "val=" not in line and "op=" not in line


def test_render_log_flow_line():
    from cyphyeye.capture import FlowRecord
    rec = FlowRecord(src="10.1.0.10", dst="10.3.1.1", start_tick=0, end_tick=3,
                     bytes_sent=220, bytes_received=60, protocol_tag="vip")
    line = render_log(rec).line
    assert line == "tick=0 src=10.1.0.10 dst=10.3.1.1 proto=vip sent=220 recv=60"


def test_parse_log_line_inverts_render():
    line = render_log(write_setpoint(5, 40001, 72), tick=9, src="n", dst="v").line
    fields = parse_log_line(line)
    assert fields == {"tick": "9", "src": "n", "dst": "v",
                      "op": "write-setpoint", "addr": "40001", "val": "72",
                      "valid": "true"}


# ---------------------------------------------------------------------------
# Flow aggregation


def test_aggregate_empty():
    assert aggregate_flows([], 10) == []


def test_aggregate_sums_one_pair_one_window():
    events = [FlowEvent(tick=t, src="a", dst="b", size=100, protocol_tag="vip")
              for t in (0, 3, 9)]
    recs = aggregate_flows(events, 10)
    assert len(recs) == 1
    assert recs[0].bytes_sent == 300 and recs[0].src == "a"
    assert recs[0].start_tick == 0 and recs[0].end_tick == 9


def test_aggregate_window_boundary_splits():
    events = [FlowEvent(tick=9, src="a", dst="b", size=10),
              FlowEvent(tick=10, src="a", dst="b", size=20)]
    recs = aggregate_flows(events, 10)
    assert [(r.start_tick, r.bytes_sent) for r in recs] == [(0, 10), (10, 20)]


def test_aggregate_mirrors_reverse_traffic():
    events = [FlowEvent(tick=0, src="a", dst="b", size=100),
              FlowEvent(tick=1, src="b", dst="a", size=40)]
    recs = {(r.src, r.dst): r for r in aggregate_flows(events, 10)}
    assert recs[("a", "b")].bytes_sent == 100
    assert recs[("a", "b")].bytes_received == 40
    assert recs[("b", "a")].bytes_sent == 40
    assert recs[("b", "a")].bytes_received == 100


flow_events = st.lists(
    st.builds(FlowEvent,
              tick=st.integers(0, 99),
              src=st.sampled_from(["a", "b", "c"]),
              dst=st.sampled_from(["a", "b", "c"]),
              size=st.integers(0, 1000),
              protocol_tag=st.sampled_from(["vip", "http", "ot-tunnel"])),
    max_size=60,
)


@given(events=flow_events, window=st.integers(1, 25))
def test_aggregate_conserves_bytes(events, window):
    recs = aggregate_flows(events, window)
    assert sum(r.bytes_sent for r in recs) == sum(e.size for e in events)


# ---------------------------------------------------------------------------
# Signature rules


def as_log_events(lines: list[str]) -> list[LogEvent]:
    return [LogEvent(tick=int(parse_log_line(l).get("tick", 0)),
                     source=parse_log_line(l).get("src", ""), line=l)
            for l in lines]


def test_firmware_rule_quiet_on_clean_run(xyz_topology):
    from cyphyeye.plantsim import Sim, default_templates
    from cyphyeye.service import render_session_lines

    events = Sim(xyz_topology, default_templates(xyz_topology), seed=5).run(80)
    logs = as_log_events(render_session_lines(events, xyz_topology))
    rules = load_ruleset([{"id": "r1", "match": {"op": "firmware-update"},
                           "severity": "high"}])
    assert match_rules(logs, rules) == []


def test_firmware_rule_fires_during_attack_cleanup(xyz_topology):
    from cyphyeye.plantsim import Sim, default_templates
    from cyphyeye.service import render_session_lines
    from tests.conftest import scenario

    sim = Sim(xyz_topology, default_templates(xyz_topology), seed=5)
    sim.inject(scenario("setpoint-alteration"))
    events = sim.run(450)  # past the cleanup stage boundary at tick 410
    logs = as_log_events(render_session_lines(events, xyz_topology))
    rules = load_ruleset([{"id": "r1", "match": {"op": "firmware-update"},
                           "severity": "high"}])
    alerts = match_rules(logs, rules)
    assert alerts and all(a.severity == "high" for a in alerts)


def test_corrupt_frame_rule_fires_once_per_bad_line():
    raw = bytearray(encode_frame(read_status(2, 8)))
    raw[1] ^= 0x10
    bad = render_log(decode_frame(bytes(raw)), tick=3, src="nac-1", dst="x")
    good = render_log(read_status(2, 8), tick=3, src="nac-1", dst="x")
    rules = load_ruleset([{"id": "crc", "match": {"valid": "false"},
                           "severity": "medium"}])
    alerts = match_rules([good, bad, good], rules)
    assert alerts == [Alert(rule_id="crc", severity="medium", tick=3,
                            subject="nac-1")]


def test_match_rules_order_independent():
    lines = [LogEvent(tick=i, source=f"d{i}", line=f"tick={i} op=x valid=true")
             for i in range(6)]
    rules = load_ruleset([
        {"id": "a", "match": {"op": "x"}, "severity": "low"},
        {"id": "b", "match": {"valid": "true"}, "severity": "medium"},
    ])
    forward = match_rules(lines, rules)
    backward = match_rules(list(reversed(lines)), tuple(reversed(rules)))
    assert sorted(map(repr, forward)) == sorted(map(repr, backward))


@pytest.mark.parametrize("entry,msg", [
    ({"match": {"op": "x"}, "severity": "low"}, "missing id"),
    ({"id": "r", "match": {}, "severity": "low"}, "match"),
    ({"id": "r", "match": {"op": "x"}, "severity": "urgent"}, "severity"),
])
def test_malformed_rules_rejected(entry, msg):
    with pytest.raises(RulesetError, match=msg):
        load_ruleset([entry])
