/**
 * Anomaly bars view: one row per monitored system. The solid bar shows the
 * current level; a thin line extends from the bar tip to the served
 * near-future forecast; an arrowhead encodes the sign of the observed
 * velocity, with length scaled by its magnitude (a documented choice — the
 * sign is the contract, the length is a readability aid). Vertical lines
 * mark the response-stage thresholds, and bar color is bucketed on the same
 * scale the stages use.
 */

import type { Snapshot, Stage, SystemRow } from "./types.js";

export interface StageThresholds {
  watch: number;
  act: number;
  emergency: number;
}

/** Must mirror the service's composite configuration. */
export const DEFAULT_THRESHOLDS: StageThresholds = {
  watch: 0.25,
  act: 0.5,
  emergency: 0.75,
};

export type ColorBucket = "green" | "yellow" | "orange" | "red";

/** How many velocity units map to a full-width arrow. */
const ARROW_SCALE = 25;

export interface BarRow {
  system: string;
  stage: Stage;
  /** Solid bar extent, in the [0, 1] level domain. */
  level: number;
  /** Thin line from the bar tip to the forecast (zero-length when equal). */
  lineFrom: number;
  lineTo: number;
  lineLength: number;
  arrow: "none" | "up" | "down";
  /** Arrow length in level units, proportional to |velocity|, capped at 1. */
  arrowLength: number;
  bucket: ColorBucket;
  /** Threshold lines the solid bar reaches or passes. */
  crossed: Array<keyof StageThresholds>;
  velocity: number;
  forecast: number;
  riskRate: number;
}

export interface BarsView {
  thresholds: StageThresholds;
  rows: BarRow[];
}

export function colorBucket(level: number, thresholds: StageThresholds): ColorBucket {
  if (level >= thresholds.emergency) return "red";
  if (level >= thresholds.act) return "orange";
  if (level >= thresholds.watch) return "yellow";
  return "green";
}

export function renderBarRow(row: SystemRow, thresholds: StageThresholds): BarRow {
  const crossed = (["watch", "act", "emergency"] as const).filter(
    (name) => row.level >= thresholds[name],
  );
  const arrow = row.velocity === 0 ? "none" : row.velocity > 0 ? "up" : "down";
  return {
    system: row.system,
    stage: row.stage,
    level: row.level,
    lineFrom: row.level,
    lineTo: row.forecast,
    lineLength: Math.abs(row.forecast - row.level),
    arrow,
    arrowLength: Math.min(1, Math.abs(row.velocity) * ARROW_SCALE),
    bucket: colorBucket(row.level, thresholds),
    crossed,
    velocity: row.velocity,
    forecast: row.forecast,
    riskRate: row.risk_rate,
  };
}

export function renderAnomalyBars(
  snapshot: Snapshot,
  thresholds: StageThresholds = DEFAULT_THRESHOLDS,
): BarsView {
  return {
    thresholds,
    rows: snapshot.systems.map((row) => renderBarRow(row, thresholds)),
  };
}
