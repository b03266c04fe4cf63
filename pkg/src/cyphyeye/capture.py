"""Field-bus observation plane.

Frame codec for a Modbus-like serial protocol (CRC-16/MODBUS, little-endian on
the wire), passive-tap encapsulation, key=value log rendering, flow
aggregation, and a small declarative alert ruleset.

Envelope and capture-file integers are big-endian; only the CRC trailer is
little-endian, per the serial protocol convention.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Mapping, Optional, Sequence, Union

# ---------------------------------------------------------------------------
# CRC-16/MODBUS (poly 0xA001 reflected, init 0xFFFF)


def _make_crc_table() -> tuple[int, ...]:
    table = []
    for i in range(256):
        crc = i
        for _ in range(8):
            crc = (crc >> 1) ^ 0xA001 if crc & 1 else crc >> 1
        table.append(crc)
    return tuple(table)


_CRC_TABLE = _make_crc_table()


def crc16(data: bytes) -> int:
    crc = 0xFFFF
    for b in data:
        crc = (crc >> 8) ^ _CRC_TABLE[(crc ^ b) & 0xFF]
    return crc


# ---------------------------------------------------------------------------
# Transactions and frames

#: Published function-code table. 0x7E is a vendor-range code for firmware
#: update; read/write follow the common Modbus convention.
OP_READ_STATUS = "read-status"
OP_WRITE_SETPOINT = "write-setpoint"
OP_FIRMWARE_UPDATE = "firmware-update"
OP_UNKNOWN = "unknown"

FUNCTION_CODES = {
    OP_READ_STATUS: 0x03,
    OP_WRITE_SETPOINT: 0x06,
    OP_FIRMWARE_UPDATE: 0x7E,
}
_CODE_TO_OP = {v: k for k, v in FUNCTION_CODES.items()}


class MalformedFrameError(ValueError):
    """Frame too short to contain unit, function code, and CRC."""


@dataclass(frozen=True)
class ParsedTransaction:
    """Decoded command semantics of one frame.

    For the known ops, `value` carries the register count (read-status) or the
    written value (write-setpoint / firmware-update). A CRC failure yields
    valid=False with op/address/value absent: nothing past the CRC check is
    trusted. Unknown-but-valid function codes keep their raw data for lossless
    re-encoding.
    """

    unit_id: Optional[int]
    op: Optional[str]
    address: Optional[int] = None
    value: Optional[int] = None
    valid: bool = True
    function_code: Optional[int] = None
    payload: Optional[bytes] = None  # unknown ops only

    def __post_init__(self):
        if not self.valid and (self.op or self.address is not None or self.value is not None):
            raise ValueError("invalid transaction must not carry op/address/value")


def read_status(unit_id: int, address: int, count: int = 1) -> ParsedTransaction:
    return ParsedTransaction(unit_id, OP_READ_STATUS, address, count,
                             function_code=FUNCTION_CODES[OP_READ_STATUS])


def write_setpoint(unit_id: int, address: int, value: int) -> ParsedTransaction:
    return ParsedTransaction(unit_id, OP_WRITE_SETPOINT, address, value,
                             function_code=FUNCTION_CODES[OP_WRITE_SETPOINT])


def firmware_update(unit_id: int, address: int, value: int) -> ParsedTransaction:
    return ParsedTransaction(unit_id, OP_FIRMWARE_UPDATE, address, value,
                             function_code=FUNCTION_CODES[OP_FIRMWARE_UPDATE])


def encode_frame(tx: ParsedTransaction) -> bytes:
    """Serialize a valid transaction: unit, fc, data, CRC16 little-endian."""
    if not tx.valid:
        raise ValueError("cannot encode an invalid transaction")
    if tx.unit_id is None or not 0 <= tx.unit_id <= 0xFF:
        raise ValueError(f"unit id out of range: {tx.unit_id}")
    if tx.op == OP_UNKNOWN:
        if tx.function_code is None:
            raise ValueError("unknown op requires a function code")
        fc = tx.function_code
        data = tx.payload or b""
    else:
        try:
            fc = FUNCTION_CODES[tx.op]
        except KeyError:
            raise ValueError(f"unencodable op {tx.op!r}") from None
        if tx.address is None or tx.value is None:
            raise ValueError(f"{tx.op} requires address and value")
        data = struct.pack(">HH", tx.address & 0xFFFF, tx.value & 0xFFFF)
    body = bytes([tx.unit_id, fc]) + data
    return body + struct.pack("<H", crc16(body))


def decode_frame(raw: bytes) -> ParsedTransaction:
    """Parse raw frame bytes; CRC mismatch returns valid=False, never raises."""
    if len(raw) < 4:
        raise MalformedFrameError(f"frame of {len(raw)} bytes, need >= 4")
    body, (crc,) = raw[:-2], struct.unpack("<H", raw[-2:])
    if crc16(body) != crc:
        return ParsedTransaction(unit_id=None, op=None, valid=False)
    unit_id, fc, data = body[0], body[1], body[2:]
    op = _CODE_TO_OP.get(fc)
    if op is None or len(data) != 4:
        return ParsedTransaction(unit_id, OP_UNKNOWN, valid=True,
                                 function_code=fc, payload=data)
    address, value = struct.unpack(">HH", data)
    return ParsedTransaction(unit_id, op, address, value, valid=True, function_code=fc)


# ---------------------------------------------------------------------------
# Tap encapsulation


@dataclass(frozen=True)
class EncapsulatedFrame:
    tap_id: str
    segment_id: str
    tick: int
    raw: bytes

    def __post_init__(self):
        if not self.raw:
            raise ValueError("encapsulated frame must carry bytes")


def tap_observe(raw: bytes, tap_id: str, segment_id: str, tick: int,
                healthy: bool = True) -> Optional[EncapsulatedFrame]:
    """Passive observation: a healthy tap emits a copy, a failed tap emits
    nothing. Observation is never load-bearing — the caller forwards the frame
    to its destination regardless of the return value (fail-closed).
    """
    if not healthy:
        return None
    return EncapsulatedFrame(tap_id=tap_id, segment_id=segment_id, tick=tick, raw=bytes(raw))


# ---------------------------------------------------------------------------
# Capture files: magic 'CPEY', version byte, directory, then records.

CAPTURE_MAGIC = b"CPEY"
CAPTURE_VERSION = 1

# Record envelope: tapId u32, segmentId u32, tick u64, length u16, payload.
_ENVELOPE = struct.Struct(">IIQH")


class CaptureFormatError(ValueError):
    pass


def _write_directory(fh: BinaryIO, names: Sequence[str]) -> dict[str, int]:
    fh.write(struct.pack(">H", len(names)))
    ids = {}
    for i, name in enumerate(names):
        encoded = name.encode("utf-8")
        fh.write(struct.pack(">IH", i, len(encoded)))
        fh.write(encoded)
        ids[name] = i
    return ids


def _read_directory(fh: BinaryIO) -> dict[int, str]:
    (count,) = struct.unpack(">H", fh.read(2))
    out = {}
    for _ in range(count):
        ident, ln = struct.unpack(">IH", fh.read(6))
        out[ident] = fh.read(ln).decode("utf-8")
    return out


class CaptureWriter:
    """Streams EncapsulatedFrame records to a capture file.

    Tap and segment string ids are interned into numeric ids via two
    directories written after the header, so the fixed-width envelope stays
    compact.
    """

    def __init__(self, path: Union[str, Path], tap_ids: Sequence[str], segment_ids: Sequence[str]):
        self._fh = open(path, "wb")
        self._fh.write(CAPTURE_MAGIC + bytes([CAPTURE_VERSION]))
        self._taps = _write_directory(self._fh, list(tap_ids))
        self._segments = _write_directory(self._fh, list(segment_ids))

    def write(self, frame: EncapsulatedFrame) -> None:
        try:
            tap = self._taps[frame.tap_id]
            seg = self._segments[frame.segment_id]
        except KeyError as e:
            raise CaptureFormatError(f"id not in capture directory: {e.args[0]!r}") from None
        self._fh.write(_ENVELOPE.pack(tap, seg, frame.tick, len(frame.raw)))
        self._fh.write(frame.raw)

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_capture(path: Union[str, Path]) -> list[EncapsulatedFrame]:
    with open(path, "rb") as fh:
        header = fh.read(5)
        if header[:4] != CAPTURE_MAGIC:
            raise CaptureFormatError("bad magic")
        if header[4] != CAPTURE_VERSION:
            raise CaptureFormatError(f"unsupported version {header[4]}")
        taps = _read_directory(fh)
        segments = _read_directory(fh)
        frames = []
        while True:
            head = fh.read(_ENVELOPE.size)
            if not head:
                break
            if len(head) < _ENVELOPE.size:
                raise CaptureFormatError("truncated record envelope")
            tap, seg, tick, length = _ENVELOPE.unpack(head)
            raw = fh.read(length)
            if len(raw) < length:
                raise CaptureFormatError("truncated record payload")
            frames.append(EncapsulatedFrame(taps[tap], segments[seg], tick, raw))
        return frames


# ---------------------------------------------------------------------------
# Flow records and log rendering


@dataclass(frozen=True)
class FlowRecord:
    src: str
    dst: str
    start_tick: int
    end_tick: int
    bytes_sent: int
    bytes_received: int
    protocol_tag: str  # ot-tunnel | http | vip | other

    def __post_init__(self):
        if self.end_tick < self.start_tick:
            raise ValueError("end_tick before start_tick")
        if self.bytes_sent < 0 or self.bytes_received < 0:
            raise ValueError("negative byte count")


@dataclass(frozen=True)
class FlowEvent:
    """One observed IT-side exchange: `size` bytes from src to dst at `tick`."""

    tick: int
    src: str
    dst: str
    size: int
    protocol_tag: str = "other"


@dataclass(frozen=True)
class LogEvent:
    tick: int
    source: str
    line: str


#: Canonical key order for rendered lines; keys with None values are omitted.
LOG_KEY_ORDER = ("tick", "src", "dst", "op", "addr", "val", "valid",
                 "proto", "sent", "recv")


def _format_line(fields: Mapping[str, object]) -> str:
    parts = []
    for key in LOG_KEY_ORDER:
        val = fields.get(key)
        if val is None:
            continue
        if isinstance(val, bool):
            val = "true" if val else "false"
        parts.append(f"{key}={val}")
    return " ".join(parts)


def render_log(obj: Union[ParsedTransaction, FlowRecord], *, tick: Optional[int] = None,
               src: Optional[str] = None, dst: Optional[str] = None) -> LogEvent:
    """Render a transaction or flow to a deterministic key=value line."""
    if isinstance(obj, ParsedTransaction):
        if obj.valid:
            fields = {"tick": tick, "src": src, "dst": dst, "op": obj.op,
                      "addr": obj.address, "val": obj.value, "valid": True}
        else:
            fields = {"tick": tick, "src": src, "dst": dst, "valid": False}
        return LogEvent(tick=tick if tick is not None else 0,
                        source=src or "", line=_format_line(fields))
    if isinstance(obj, FlowRecord):
        fields = {"tick": obj.start_tick, "src": obj.src, "dst": obj.dst,
                  "proto": obj.protocol_tag, "sent": obj.bytes_sent,
                  "recv": obj.bytes_received}
        return LogEvent(tick=obj.start_tick, source=obj.src, line=_format_line(fields))
    raise TypeError(f"cannot render {type(obj).__name__}")


def parse_log_line(line: str) -> dict[str, str]:
    """Split a rendered line back into its key=value fields."""
    out = {}
    for token in line.split():
        key, _, val = token.partition("=")
        out[key] = val
    return out


# ---------------------------------------------------------------------------
# Flow aggregation


def aggregate_flows(events: Iterable[FlowEvent], window_ticks: int) -> list[FlowRecord]:
    """Roll flow events into one record per (src, dst, window).

    bytes_sent sums this pair's own event sizes; bytes_received mirrors the
    reverse pair's total in the same window, so sent totals alone conserve the
    event byte sum.
    """
    if window_ticks < 1:
        raise ValueError("window_ticks must be >= 1")
    sent: dict[tuple, int] = {}
    tags: dict[tuple, set] = {}
    for ev in events:
        key = (ev.tick // window_ticks, ev.src, ev.dst)
        sent[key] = sent.get(key, 0) + ev.size
        tags.setdefault(key, set()).add(ev.protocol_tag)
    records = []
    for (window, src, dst), total in sorted(sent.items()):
        tag_set = tags[(window, src, dst)]
        tag = next(iter(tag_set)) if len(tag_set) == 1 else "other"
        records.append(FlowRecord(
            src=src,
            dst=dst,
            start_tick=window * window_ticks,
            end_tick=(window + 1) * window_ticks - 1,
            bytes_sent=total,
            bytes_received=sent.get((window, dst, src), 0),
            protocol_tag=tag,
        ))
    return records


# ---------------------------------------------------------------------------
# Signature rules


@dataclass(frozen=True)
class Alert:
    rule_id: str
    severity: str  # low | medium | high
    tick: int
    subject: str


SEVERITIES = ("low", "medium", "high")


class RulesetError(ValueError):
    pass


@dataclass(frozen=True)
class SignatureRule:
    id: str
    match: Mapping[str, str]
    severity: str


def load_ruleset(source: Union[str, Path, Sequence[Mapping]]) -> tuple[SignatureRule, ...]:
    """Load and validate a declarative ruleset: [{id, match, severity}, ...]."""
    if isinstance(source, (str, Path)):
        entries = json.loads(Path(source).read_text())
    else:
        entries = source
    rules = []
    for entry in entries:
        rule_id = entry.get("id")
        if not rule_id:
            raise RulesetError("rule missing id")
        match = entry.get("match")
        if not isinstance(match, Mapping) or not match:
            raise RulesetError(f"rule {rule_id!r}: match must be a non-empty mapping")
        severity = entry.get("severity")
        if severity not in SEVERITIES:
            raise RulesetError(f"rule {rule_id!r}: bad severity {severity!r}")
        rules.append(SignatureRule(id=rule_id, match=dict(match), severity=severity))
    return tuple(rules)


def match_rules(log_events: Iterable[LogEvent], ruleset: Sequence[SignatureRule]) -> list[Alert]:
    """Every (event, rule) match yields one Alert; order-independent."""
    alerts = []
    for event in log_events:
        fields = parse_log_line(event.line)
        for rule in ruleset:
            if all(fields.get(k) == str(v) for k, v in rule.match.items()):
                alerts.append(Alert(rule_id=rule.id, severity=rule.severity,
                                    tick=event.tick, subject=event.source))
    return alerts
