/** Shared builders and fixture loading for the dashboard tests. */

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import type { Snapshot, SystemRow, TrafficRow } from "../src/types.js";

/** A session snapshot recorded from the real service (scripts/record-fixture.mjs). */
export function loadFixture(): Snapshot {
  const path = fileURLToPath(new URL("./fixtures/snapshot.json", import.meta.url));
  return JSON.parse(readFileSync(path, "utf-8")) as Snapshot;
}

export function makeSystem(overrides: Partial<SystemRow> = {}): SystemRow {
  return {
    system: "fb-bus",
    tick: 10,
    level: 0,
    velocity: 0,
    forecast: 0,
    stage: "normal",
    behavioral: 0,
    risk_rate: 0.13,
    ...overrides,
  };
}

export function makeSnapshot(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    tick: 10,
    devices: [],
    systems: [],
    traffic: [],
    partners: {},
    active_rules: [],
    pending_alerts: [],
    annotations: [],
    ...overrides,
  };
}

/** Symmetric byte exchange between two addresses as the service reports it. */
export function trafficPair(
  a: string,
  b: string,
  aToB: number,
  bToA: number,
): TrafficRow[] {
  return [
    { src: a, dst: b, sent: aToB, recv: bToA },
    { src: b, dst: a, sent: bToA, recv: aToB },
  ];
}
