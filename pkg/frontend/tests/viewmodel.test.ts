import { describe, expect, it } from "vitest";

import type { AlertRow, Snapshot, StreamDelta } from "../src/types.js";
import { ViewModel } from "../src/viewmodel.js";
import { makeSnapshot, makeSystem } from "./helpers.js";

function delta(
  seq: number,
  kind: StreamDelta["kind"],
  data: Record<string, unknown> = {},
  tick = seq,
): StreamDelta {
  return { seq, tick, kind, data };
}

function freshModel(snapshot: Snapshot = makeSnapshot()): ViewModel {
  const vm = new ViewModel();
  vm.applySnapshot(snapshot);
  return vm;
}

describe("delta ordering", () => {
  it("accepts a contiguous run from any starting seq", () => {
    const vm = freshModel();
    expect(vm.applyDelta(delta(5, "sim"))).toBe(true);
    expect(vm.applyDelta(delta(6, "log"))).toBe(true);
    expect(vm.lastSeq).toBe(6);
    expect(vm.needsRefetch).toBe(false);
  });

  it("rejects a gap and demands a refetch", () => {
    const vm = freshModel();
    vm.applyDelta(delta(5, "sim"));
    expect(vm.applyDelta(delta(7, "sim"))).toBe(false);
    expect(vm.needsRefetch).toBe(true);
    expect(vm.lastSeq).toBe(5);
  });

  it("rejects a replayed delta instead of folding it twice", () => {
    const vm = freshModel();
    vm.applyDelta(delta(5, "sim"));
    expect(vm.applyDelta(delta(5, "sim"))).toBe(false);
  });

  it("advances the visible tick with applied deltas", () => {
    const vm = freshModel(makeSnapshot({ tick: 10 }));
    vm.applyDelta(delta(0, "sim", {}, 42));
    expect(vm.snapshot?.tick).toBe(42);
  });
});

describe("folding", () => {
  it("replaces state wholesale on a snapshot delta", () => {
    const vm = freshModel();
    const next = makeSnapshot({
      tick: 64,
      systems: [makeSystem({ system: "fb-star", level: 0.8 })],
    });
    vm.applyDelta(delta(9, "snapshot", next as unknown as Record<string, unknown>));
    expect(vm.snapshot?.tick).toBe(64);
    expect(vm.snapshot?.systems).toHaveLength(1);
  });

  it("upserts anomaly rows keeping systems sorted", () => {
    const vm = freshModel(
      makeSnapshot({
        systems: [
          makeSystem({ system: "fb-bus", level: 0.1 }),
          makeSystem({ system: "fb-star", level: 0.2 }),
        ],
      }),
    );
    vm.applyDelta(
      delta(0, "anomaly", makeSystem({ system: "fb-star", level: 0.6 }) as
        unknown as Record<string, unknown>),
    );
    vm.applyDelta(
      delta(1, "anomaly", makeSystem({ system: "fb-ring", level: 0.3 }) as
        unknown as Record<string, unknown>),
    );
    expect(vm.snapshot?.systems.map((s) => s.system)).toEqual([
      "fb-bus",
      "fb-ring",
      "fb-star",
    ]);
    expect(vm.snapshot?.systems.find((s) => s.system === "fb-star")?.level).toBe(0.6);
  });

  it("keeps pending alerts sorted and acknowledges them away", () => {
    const vm = freshModel();
    const late: AlertRow = { id: "alert-9", rule: "r", severity: "high", subject: "s", tick: 30 };
    const early: AlertRow = { id: "alert-2", rule: "r", severity: "low", subject: "s", tick: 10 };
    vm.applyDelta(delta(0, "alert", late as unknown as Record<string, unknown>));
    vm.applyDelta(delta(1, "alert", early as unknown as Record<string, unknown>));
    expect(vm.snapshot?.pending_alerts.map((a) => a.id)).toEqual(["alert-2", "alert-9"]);
    vm.applyDelta(delta(2, "command", { type: "acknowledge", alert: "alert-2" }));
    expect(vm.snapshot?.pending_alerts.map((a) => a.id)).toEqual(["alert-9"]);
    expect(vm.needsRefetch).toBe(false);
  });

  it("never folds rule changes client-side", () => {
    const vm = freshModel();
    vm.applyDelta(delta(0, "rule-change", { src: "dmz", dst: "ot", allow: false }));
    expect(vm.needsRefetch).toBe(true);
    expect(vm.snapshot?.active_rules).toEqual([]);
  });

  it("demands a refetch after quarantine and release commands", () => {
    for (const type of ["quarantine", "release"]) {
      const vm = freshModel();
      vm.applyDelta(delta(0, "command", { type, pair: ["dmz", "ot"] }));
      expect(vm.needsRefetch).toBe(true);
    }
  });

  it("marks the session dead on session-end", () => {
    const vm = freshModel();
    vm.applyDelta(delta(0, "session-end"));
    expect(vm.sessionLive).toBe(false);
  });
});

describe("annotation drafts", () => {
  it("keeps a draft until the service confirms it", () => {
    const vm = freshModel();
    vm.drafts.push({ subject: "bms-server", text: "checking this" });
    vm.applyDelta(
      delta(0, "annotation", {
        subject: "bms-server",
        author: "operator",
        text: "something else",
        tick: 3,
        seq: 0,
      }),
    );
    expect(vm.drafts).toHaveLength(1);
    vm.applyDelta(
      delta(1, "annotation", {
        subject: "bms-server",
        author: "operator",
        text: "checking this",
        tick: 4,
        seq: 1,
      }),
    );
    expect(vm.drafts).toHaveLength(0);
    expect(vm.snapshot?.annotations).toHaveLength(2);
  });
});

describe("snapshot refetch contract", () => {
  it("folding to a snapshot boundary equals starting from that snapshot", () => {
    const base = makeSnapshot({
      tick: 5,
      systems: [makeSystem({ system: "fb-bus", level: 0.1 })],
    });
    const boundary = makeSnapshot({
      tick: 8,
      systems: [
        makeSystem({ system: "fb-bus", level: 0.4, tick: 8 }),
        makeSystem({ system: "fb-star", level: 0.9, tick: 8 }),
      ],
      annotations: [
        { subject: "fb-bus", author: "operator", text: "noted", tick: 7, seq: 12 },
      ],
    });

    const folded = freshModel(base);
    folded.applyDelta(
      delta(3, "anomaly", makeSystem({ system: "fb-bus", level: 0.2 }) as
        unknown as Record<string, unknown>),
    );
    folded.applyDelta(
      delta(4, "snapshot", boundary as unknown as Record<string, unknown>, 8),
    );

    const fresh = freshModel(boundary);
    expect(folded.snapshot).toEqual(fresh.snapshot);
    expect(folded.needsRefetch).toBe(false);
  });

  it("clears the refetch flag when a snapshot is applied", () => {
    const vm = freshModel();
    vm.applyDelta(delta(0, "rule-change", {}));
    expect(vm.needsRefetch).toBe(true);
    vm.applySnapshot(makeSnapshot({ tick: 99 }));
    expect(vm.needsRefetch).toBe(false);
    expect(vm.snapshot?.tick).toBe(99);
  });
});
