"""Append-only JSONL event store.

Every session writes its full history as one record per line.  Records are
immutable and strictly ordered by ``seq``; snapshot records are indexed so a
reader can restore state from the most recent snapshot and fold only the
tail.  Loading tolerates a torn final line (a crash mid-write) by dropping
it; corruption anywhere earlier is an error.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, Optional


class CorruptStoreError(ValueError):
    """A store file is damaged somewhere other than its final line."""


def canonical_json(obj: Any) -> str:
    """Serialise deterministically: sorted keys, no whitespace."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class Record:
    """One immutable store entry."""

    seq: int
    tick: int
    kind: str
    data: dict

    def to_line(self) -> str:
        return canonical_json(
            {"seq": self.seq, "tick": self.tick, "kind": self.kind, "data": self.data}
        )


class EventStore:
    """Ordered record log, optionally mirrored to a JSONL file."""

    def __init__(self, path: Optional[str | Path] = None) -> None:
        self._records: list[Record] = []
        self._snapshot_seqs: list[int] = []
        self._path = Path(path) if path is not None else None
        self._fh = None
        self._lock = threading.Lock()
        if self._path is not None:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self._path, "a", encoding="utf-8")

    # -- writing ---------------------------------------------------------

    def next_seq(self) -> int:
        return len(self._records)

    def append(self, tick: int, kind: str, data: dict) -> Record:
        with self._lock:
            rec = Record(seq=len(self._records), tick=tick, kind=kind, data=data)
            self._records.append(rec)
            if kind == "snapshot":
                self._snapshot_seqs.append(rec.seq)
            if self._fh is not None:
                self._fh.write(rec.to_line() + "\n")
        return rec

    def flush(self) -> None:
        if self._fh is not None:
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            self._fh.close()
            self._fh = None

    # -- reading ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self._records)

    def record(self, seq: int) -> Record:
        return self._records[seq]

    def records(self, from_seq: int = 0) -> Iterator[Record]:
        # Slice under the lock so a concurrent append cannot tear the view.
        with self._lock:
            chunk = self._records[from_seq:]
        yield from chunk

    def snapshot_records(self) -> list[Record]:
        with self._lock:
            return [self._records[s] for s in self._snapshot_seqs]

    def latest_snapshot(self, before_seq: Optional[int] = None) -> Optional[Record]:
        """Most recent snapshot record, optionally restricted to seq < before_seq."""
        with self._lock:
            for s in reversed(self._snapshot_seqs):
                if before_seq is None or s < before_seq:
                    return self._records[s]
        return None

    # -- persistence -----------------------------------------------------

    @classmethod
    def load(cls, path: str | Path) -> "EventStore":
        """Read a store file back into memory (without reopening it for append).

        A torn final line is silently dropped; anything else malformed raises
        :class:`CorruptStoreError`.
        """
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        store = cls(path=None)
        for i, line in enumerate(lines):
            try:
                doc = json.loads(line)
                rec = Record(
                    seq=int(doc["seq"]),
                    tick=int(doc["tick"]),
                    kind=str(doc["kind"]),
                    data=doc["data"],
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                if i == len(lines) - 1:
                    break  # torn tail from a crash mid-write
                raise CorruptStoreError(f"bad record at line {i + 1}: {exc}") from exc
            if rec.seq != len(store._records):
                if i == len(lines) - 1:
                    break
                raise CorruptStoreError(
                    f"sequence gap at line {i + 1}: expected {len(store._records)}, "
                    f"found {rec.seq}"
                )
            store._records.append(rec)
            if rec.kind == "snapshot":
                store._snapshot_seqs.append(rec.seq)
        return store
