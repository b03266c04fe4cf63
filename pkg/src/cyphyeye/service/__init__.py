"""Long-running coordinator: pipeline sessions, append-only store, operator
API, and the command-line entry point."""

from cyphyeye.service.store import CorruptStoreError, EventStore, Record, canonical_json
from cyphyeye.service.pipeline import (
    Session, SessionConfig, ModelBundle, SnapshotReducer,
    train_models, run_pipeline, get_snapshot, stream_deltas, operator_command,
    weekly_report, replay_session, recover_reducer, render_session_lines, SESSIONS,
)

__all__ = [
    "CorruptStoreError", "EventStore", "Record", "canonical_json",
    "Session", "SessionConfig", "ModelBundle", "SnapshotReducer",
    "train_models", "run_pipeline", "get_snapshot", "stream_deltas",
    "operator_command", "weekly_report", "replay_session", "recover_reducer",
    "render_session_lines", "SESSIONS",
]
