"""Command-line entry point: simulate, train, serve, replay, report."""

from __future__ import annotations

import argparse
import sys
import threading
import time
from pathlib import Path

from cyphyeye.analytics import load_config
from cyphyeye.plantsim import Sim, default_templates, to_json_line
from cyphyeye.scenarios import load_scenario
from cyphyeye.service.pipeline import (
    SESSIONS, ModelBundle, Session, SessionConfig, replay_session, train_models,
)
from cyphyeye.service.store import EventStore
from cyphyeye.topology import build_topology


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", required=True, help="plant/topology description (JSON)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--config", default=None, help="analytics config overrides (JSON)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cyphyeye",
                                     description="cyber-physical defense workbench")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("simulate", help="run the plant and write its event stream")
    _add_common(p)
    p.add_argument("--scenario", action="append", default=[],
                   help="attack scenario JSON (repeatable)")
    p.add_argument("--ticks", type=int, default=600)
    p.add_argument("--out", default="-", help="output JSONL path, '-' for stdout")

    p = sub.add_parser("train", help="train detectors on clean runs")
    _add_common(p)
    p.add_argument("--ticks", type=int, default=400)
    p.add_argument("--out", required=True, help="directory for model checkpoints")

    p = sub.add_parser("serve", help="run a live session behind the HTTP API")
    _add_common(p)
    p.add_argument("--scenario", action="append", default=[])
    p.add_argument("--ticks", type=int, default=600)
    p.add_argument("--models", default=None, help="checkpoint directory from 'train'")
    p.add_argument("--store", default=None, help="event store JSONL path")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8200)
    p.add_argument("--tick-interval", type=float, default=0.05,
                   help="seconds between ticks while serving")

    p = sub.add_parser("replay", help="verify a stored session's snapshots")
    p.add_argument("--store", required=True)

    p = sub.add_parser("report", help="traffic delta report from a stored session")
    p.add_argument("--store", required=True)
    p.add_argument("--from", dest="from_tick", type=int, required=True)
    p.add_argument("--to", dest="to_tick", type=int, required=True)
    p.add_argument("--threshold", type=float, default=0.2)
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    return parser


def _session_config(args, *, policy_enabled: bool = True) -> SessionConfig:
    return SessionConfig(seed=args.seed, ticks=args.ticks,
                         policy_enabled=policy_enabled,
                         analytics=load_config(args.config))


def cmd_simulate(args) -> int:
    topology = build_topology(args.spec)
    sim = Sim(topology, default_templates(topology), args.seed)
    for path in args.scenario:
        sim.inject(load_scenario(path))
    out = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8")
    try:
        for _ in range(args.ticks):
            for ev in sim.step():
                out.write(to_json_line(ev) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_train(args) -> int:
    topology = build_topology(args.spec)
    config = load_config(args.config)
    bundle = train_models(topology, config, ticks=args.ticks, seed=args.seed)
    out = bundle.save(args.out)
    (Path(args.out) / "config.json").write_text(config.to_json() + "\n",
                                                encoding="utf-8")
    print(f"checkpoints written to {out}")
    print(f"log-model epoch scores: "
          f"{[round(s, 4) for s in bundle.log_model.epoch_scores]}")
    print(f"autoencoder epoch errors: "
          f"{[round(e, 6) for e in bundle.autoencoder.epoch_errors[:5]]} ...")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from cyphyeye.service.api import create_app

    topology = build_topology(args.spec)
    scenarios = [load_scenario(p) for p in args.scenario]
    models = ModelBundle.load(args.models) if args.models else None
    session = Session(topology, scenarios, config=_session_config(args),
                      models=models, store_path=args.store, session_id="session-1")
    SESSIONS[session.id] = session

    def drive():
        for _ in range(args.ticks):
            session.step()
            if args.tick_interval > 0:
                time.sleep(args.tick_interval)
        session.finish()

    threading.Thread(target=drive, daemon=True).start()
    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_replay(args) -> int:
    store = EventStore.load(args.store)
    checked, mismatches = replay_session(store)
    if mismatches:
        print(f"{checked} snapshots checked, {len(mismatches)} mismatched "
              f"(seq {mismatches})")
        return 1
    print(f"{checked} snapshots checked, all reproduced exactly")
    return 0


def cmd_report(args) -> int:
    from cyphyeye.analytics.reports import render_report_csv
    from cyphyeye.capture import FlowEvent, aggregate_flows
    from cyphyeye.analytics import traffic_delta_report

    store = EventStore.load(args.store)
    span = args.to_tick - args.from_tick
    if span <= 0:
        print("empty report window", file=sys.stderr)
        return 2
    if args.from_tick - span < 0:
        print("no preceding window of equal length", file=sys.stderr)
        return 2

    def flows(start, stop):
        events = []
        for rec in store.records():
            if (rec.kind == "sim" and rec.data.get("kind") == "flow-emitted"
                    and start <= rec.tick < stop):
                p = rec.data["payload"]
                events.append(FlowEvent(tick=rec.tick, src=p["src"], dst=p["dst"],
                                        size=p["size"], protocol_tag=p["proto"]))
        return aggregate_flows(events, max(stop - start, 1))

    rows = traffic_delta_report(flows(args.from_tick - span, args.from_tick),
                                flows(args.from_tick, args.to_tick),
                                args.threshold)
    text = render_report_csv(rows)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text, encoding="utf-8")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"simulate": cmd_simulate, "train": cmd_train, "serve": cmd_serve,
                "replay": cmd_replay, "report": cmd_report}
    return handlers[args.cmd](args)


if __name__ == "__main__":
    sys.exit(main())
