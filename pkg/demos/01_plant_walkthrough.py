"""Tour of the shipped desk-scale plant: zones, rules, monitor taps, and the
wire traffic a few simulated ticks produce.

Run from the repository root:  python3 demos/01_plant_walkthrough.py
"""

import json
from pathlib import Path

from cyphyeye import build_topology, monitor_placement, reachable
from cyphyeye.capture import decode_frame, render_log
from cyphyeye.plantsim import KIND_FLOW, KIND_FRAME, Sim, default_templates

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    spec = json.loads((ROOT / "data" / "xyz.json").read_text())
    topo = build_topology(spec)

    print("== zones ==")
    for z in topo.zones:
        members = topo.devices_in_zone(z.id)
        print(f"  {z.id:<12} kind={z.kind.value:<16} devices={len(members)}")

    print("\n== zone crossings (effective policy) ==")
    probes = [("corporate", "dmz", "eng-ws-1", "vp-1"),
              ("dmz", "facilities", "vp-1", "bms-server"),
              ("internet", "facilities", "ext-host", "bms-server"),
              ("corporate", "facilities", "eng-ws-1", "bms-server")]
    for src, dst, a, b in probes:
        direct = topo.crossing_allowed(src, dst)
        end_to_end = reachable(topo, a, b)
        print(f"  {src:>9} -> {dst:<10} direct={'allow' if direct else 'deny '}"
              f"  {a}->{b} path={'yes' if end_to_end else 'no'}")

    print("\n== field-bus monitor taps ==")
    for seg in topo.segments:
        plan = monitor_placement(seg)
        print(f"  {seg.id:<8} layout={seg.topology.value:<5}"
              f" members={len(seg.members)} -> {plan.monitor_count} tap(s)")
        for pos in plan.positions[:3]:
            print(f"      {pos.kind}"
                  + (f" spoke={pos.spoke}" if pos.spoke else "")
                  + (f" index={pos.index}" if pos.index is not None else ""))
        if len(plan.positions) > 3:
            print(f"      ... {len(plan.positions) - 3} more")

    print("\n== three ticks of plant traffic ==")
    sim = Sim(topo, default_templates(topo), seed=42)
    for _ in range(3):
        events = sim.step()
        frames = [e for e in events if e.kind == KIND_FRAME]
        flows = [e for e in events if e.kind == KIND_FLOW]
        print(f"  tick {events[0].tick}: {len(frames)} serial frames,"
              f" {len(flows)} ip flows")

    ev = frames[0]
    raw = bytes.fromhex(ev.payload["raw"])
    tx = decode_frame(raw)
    print("\n== one frame, decoded ==")
    print(f"  wire bytes : {raw.hex(' ')}")
    print(f"  decoded    : unit={tx.unit_id} op={tx.op} addr={tx.address}"
          f" value={tx.value}")
    log = render_log(tx, tick=ev.tick, src=ev.payload["src"], dst=ev.payload["dst"])
    print(f"  log line   : {log.line}")


if __name__ == "__main__":
    main()
