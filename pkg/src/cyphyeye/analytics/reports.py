"""Weekly traffic-delta report: per-destination byte totals across two
windows, flagging dramatic changes and addresses seen in only one window."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

from cyphyeye.capture import FlowRecord


@dataclass(frozen=True)
class ReportRow:
    dst: str
    prev_bytes: int
    cur_bytes: int
    delta_pct: float  # fractional change; inf for newly appearing destinations
    flagged: bool


def _totals(records: Iterable[FlowRecord]) -> dict[str, int]:
    out: dict[str, int] = {}
    for r in records:
        out[r.dst] = out.get(r.dst, 0) + r.bytes_sent
    return out


def traffic_delta_report(previous_week: Sequence[FlowRecord],
                         current_week: Sequence[FlowRecord],
                         threshold: float) -> list[ReportRow]:
    """One row per destination address, sorted by |delta| descending.

    A row is flagged when |delta| exceeds the threshold fraction, or when the
    address appears in exactly one week (new or vanished device).
    """
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must be a fraction in (0, 1], got {threshold}")
    prev, cur = _totals(previous_week), _totals(current_week)
    rows = []
    for dst in sorted(set(prev) | set(cur)):
        p, c = prev.get(dst), cur.get(dst)
        one_week_only = (p is None) != (c is None)
        p, c = p or 0, c or 0
        if p > 0:
            delta = (c - p) / p
        else:
            delta = math.inf if c > 0 else 0.0
        rows.append(ReportRow(dst=dst, prev_bytes=p, cur_bytes=c, delta_pct=delta,
                              flagged=one_week_only or abs(delta) > threshold))
    rows.sort(key=lambda r: (-abs(r.delta_pct), r.dst))
    return rows


def _format_delta(delta: float) -> str:
    if math.isinf(delta):
        return "inf"
    return f"{delta:.6g}"


def render_report_csv(rows: Sequence[ReportRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["dst", "prev_bytes", "cur_bytes", "delta_pct", "flagged"])
    for r in rows:
        writer.writerow([r.dst, r.prev_bytes, r.cur_bytes,
                         _format_delta(r.delta_pct), "true" if r.flagged else "false"])
    return buf.getvalue()


def write_report_csv(rows: Sequence[ReportRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(render_report_csv(rows))
    return path
