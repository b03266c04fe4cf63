"""Operator's day: a live session with the learned quarantine policy enabled,
manual commands issued mid-run, a traffic report at the end, and a byte-exact
replay audit of the whole session record.

Run from the repository root:  python3 demos/03_operator_session.py
"""

import json
from pathlib import Path

from cyphyeye import build_topology
from cyphyeye.scenarios import load_scenario
from cyphyeye.service import (
    Session,
    SessionConfig,
    replay_session,
    train_models,
)
from cyphyeye.analytics import render_report_csv

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    spec = json.loads((ROOT / "data" / "xyz.json").read_text())
    topo = build_topology(spec)
    models = train_models(topo, seeds=(101, 102), ticks=300, seed=7)
    scenario = load_scenario(ROOT / "scenarios" / "unauthorized-access.json")

    config = SessionConfig(seed=23, ticks=400, policy_enabled=True)
    sess = Session(topo, [scenario], config=config, models=models,
                   session_id="demo-operator")

    print("running 400 ticks with the quarantine policy live ...")
    policy_actions = []
    for t in range(config.ticks):
        sess.step()
        if t == 120:
            sess.apply_command({"type": "annotate", "subject": "fb-bus",
                                "text": "damper chatter looks odd"},
                               author="op-ada")
        if t == 200:
            sess.apply_command({"type": "quarantine",
                                "pair": ["corporate", "dmz"]}, author="op-ada")
        if t == 260:
            sess.apply_command({"type": "release",
                                "pair": ["corporate", "dmz"]}, author="op-ada")
    sess.finish()

    for rec in sess.store.records():
        if rec.kind == "rule-change":
            policy_actions.append((rec.tick, rec.data))

    print(f"\nrule changes during the run: {len(policy_actions)}")
    for tick, data in policy_actions[:8]:
        if data["action"] == "set":
            print(f"  tick {tick:>4} set   {data['src']}->{data['dst']} "
                  f"allow={data['allow']} origin={data['origin']}")
        else:
            print(f"  tick {tick:>4} clear origin={data['origin']}")
    if len(policy_actions) > 8:
        print(f"  ... {len(policy_actions) - 8} more")

    snap = sess.snapshot_now()
    print("\nfinal operator picture:")
    for row in snap["systems"]:
        print(f"  {row['system']:<8} level={row['level']:.3f} "
              f"stage={row['stage']}")
    print(f"  active rules beyond baseline: {len(snap['active_rules'])}")
    for note in snap["annotations"]:
        print(f"  note on {note['subject']} by {note['author']}: {note['text']}")

    rows = sess.weekly_report((100, 200), (200, 300), threshold=0.2)
    flagged = [r for r in rows if r.flagged]
    print(f"\ntraffic report [200,300) vs [100,200): "
          f"{len(rows)} destinations, {len(flagged)} flagged")
    print("\n".join(render_report_csv(flagged[:5]).splitlines()[:6]))

    checked, mismatches = replay_session(sess.store)
    print(f"\nreplay audit: {checked} stored snapshots checked, "
          f"{len(mismatches)} mismatches")


if __name__ == "__main__":
    main()
