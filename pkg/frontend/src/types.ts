/**
 * Payload types for the session HTTP API, mirroring the JSON Schemas
 * shipped with the service under docs/api/.
 */

/** One device in the monitored plant, with map coordinates. */
export interface DeviceRow {
  id: string;
  /** IP address or field-bus address ("segment:unit"). */
  address: string;
  zone: string;
  class: string;
  /** Field-bus segment id for serial devices, null for IP devices. */
  segment?: string | null;
  x: number;
  y: number;
}

/** Per-system composite anomaly state. */
export interface SystemRow {
  system: string;
  tick: number;
  /** Smoothed anomaly level in [0, 1]. */
  level: number;
  /** Observed change velocity (level units per tick). */
  velocity: number;
  /** Near-future expectation, clamped to [0, 1]. */
  forecast: number;
  stage: Stage;
  /** Raw behavioral metric (reconstruction distance / training p95). */
  behavioral: number;
  risk_rate: number;
}

export type Stage = "normal" | "watch" | "act" | "emergency";

/** Directed per-pair byte totals; every row has a mirror row. */
export interface TrafficRow {
  src: string;
  dst: string;
  /** Bytes src sent to dst. */
  sent: number;
  /** Bytes dst sent back to src. */
  recv: number;
}

export interface RuleRow {
  src: string;
  dst: string;
  origin: "baseline" | "policy" | "operator";
  id: string;
  allow: boolean;
}

export interface AlertRow {
  id: string;
  rule: string;
  severity: string;
  subject: string;
  tick: number;
}

export interface Annotation {
  subject: string;
  author: string;
  text: string;
  tick: number;
  seq: number;
}

/** One peer a device exchanged traffic with, with byte totals each way. */
export interface PartnerEdge {
  /** Peer address (IP or field-bus "segment:unit"). */
  partner: string;
  /** Bytes sent to the peer. */
  sent: number;
  /** Bytes received back from the peer. */
  recv: number;
}

/** Full dashboard state at one tick, as returned by GET /snapshot. */
export interface Snapshot {
  tick: number;
  devices: DeviceRow[];
  systems: SystemRow[];
  traffic: TrafficRow[];
  /** Address -> one row per peer, sorted by peer address. */
  partners: Record<string, PartnerEdge[]>;
  active_rules: RuleRow[];
  pending_alerts: AlertRow[];
  annotations: Annotation[];
}

export type DeltaKind =
  | "session-start"
  | "sim"
  | "log"
  | "alert"
  | "context"
  | "anomaly"
  | "rule-change"
  | "command"
  | "annotation"
  | "snapshot"
  | "session-end";

/** One server-sent event from GET /stream: contiguous seq, kind, payload. */
export interface StreamDelta {
  seq: number;
  tick: number;
  kind: DeltaKind;
  data: Record<string, unknown>;
}

export interface SessionRow {
  session: string;
  tick: number;
  live: boolean;
  records: number;
}

export type OperatorCommand =
  | { type: "quarantine"; pair: [string, string]; session?: string; author?: string }
  | { type: "release"; pair: [string, string]; session?: string; author?: string }
  | { type: "annotate"; subject: string; text: string; session?: string; author?: string }
  | { type: "acknowledge"; alert: string; session?: string; author?: string };
