"""HTTP surface over pipeline sessions.

Read endpoints serve reducer output (snapshots, record stream, reports,
annotations); the single write endpoint queues operator commands through the
session, which logs them before applying their effects.
"""

from __future__ import annotations

import time
from typing import Mapping, Optional

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import PlainTextResponse, StreamingResponse

from cyphyeye.analytics.reports import render_report_csv
from cyphyeye.service import pipeline
from cyphyeye.service.store import canonical_json


def _resolve(sessions: Mapping[str, pipeline.Session],
             session_id: Optional[str]) -> pipeline.Session:
    if session_id is None:
        if len(sessions) == 1:
            return next(iter(sessions.values()))
        raise HTTPException(status_code=400,
                            detail="session parameter required when several exist")
    try:
        return sessions[session_id]
    except KeyError:
        raise HTTPException(status_code=404,
                            detail=f"unknown session {session_id!r}") from None


def create_app(sessions: Optional[Mapping[str, pipeline.Session]] = None) -> FastAPI:
    """Build the service app over a session registry (default: the global one)."""
    registry = sessions if sessions is not None else pipeline.SESSIONS
    app = FastAPI(title="cyphyeye", version="0.1.0")

    @app.get("/sessions")
    def list_sessions() -> list[dict]:
        return [
            {"session": s.id, "tick": s.last_tick, "live": s.live,
             "records": len(s.store)}
            for s in registry.values()
        ]

    @app.get("/snapshot")
    def snapshot(session: Optional[str] = None,
                 tick: Optional[int] = None) -> dict:
        sess = _resolve(registry, session)
        if tick is None:
            return sess.snapshot_now()
        snap = sess.snapshot_at(tick)
        if snap is None:
            raise HTTPException(status_code=404,
                                detail=f"tick {tick} is outside the recorded session")
        return snap

    @app.get("/stream")
    def stream(session: Optional[str] = None, from_seq: int = 0) -> StreamingResponse:
        sess = _resolve(registry, session)

        def gen():
            cursor = from_seq
            while True:
                progressed = False
                for rec in sess.store.records(cursor):
                    cursor = rec.seq + 1
                    progressed = True
                    body = canonical_json({"seq": rec.seq, "tick": rec.tick,
                                           "kind": rec.kind, "data": rec.data})
                    yield f"id: {rec.seq}\nevent: {rec.kind}\ndata: {body}\n\n"
                if not sess.live:
                    return
                if not progressed:
                    time.sleep(0.05)

        return StreamingResponse(gen(), media_type="text/event-stream")

    @app.post("/command")
    async def command(request: Request) -> dict:
        body = await request.json()
        if not isinstance(body, dict):
            raise HTTPException(status_code=400, detail="command body must be an object")
        sess = _resolve(registry, body.get("session"))
        author = str(body.get("author", "operator"))
        try:
            return sess.apply_command(body, author=author)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None

    @app.get("/report")
    def report(session: Optional[str] = None,
               frm: int = Query(..., alias="from"), to: int = Query(...),
               threshold: float = 0.2) -> PlainTextResponse:
        sess = _resolve(registry, session)
        if to <= frm:
            raise HTTPException(status_code=400, detail="empty report window")
        span = to - frm
        prev = (frm - span, frm)
        if prev[0] < 0:
            raise HTTPException(status_code=400,
                                detail="no preceding window of equal length")
        try:
            rows = sess.weekly_report(prev, (frm, to), threshold=threshold)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        return PlainTextResponse(render_report_csv(rows), media_type="text/csv")

    @app.get("/annotations")
    def annotations(session: Optional[str] = None,
                    subject: Optional[str] = None) -> list[dict]:
        sess = _resolve(registry, session)
        notes = sess.reducer.annotations
        if subject is not None:
            notes = [n for n in notes if n["subject"] == subject]
        return list(notes)

    @app.post("/annotations")
    async def annotate(request: Request) -> dict:
        body = await request.json()
        if not isinstance(body, dict):
            raise HTTPException(status_code=400, detail="annotation body must be an object")
        sess = _resolve(registry, body.get("session"))
        cmd = {"type": "annotate", "subject": body.get("subject"),
               "text": body.get("text", "")}
        try:
            return sess.apply_command(cmd, author=str(body.get("author", "operator")))
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None

    return app
