/**
 * Client-side state: the latest applied snapshot plus UI selections and
 * unsent annotation drafts. The model renders only what the service has
 * served — deltas are folded in strict seq order, and anything the client
 * cannot fold faithfully (rule changes, quarantine/release effects) flips
 * `needsRefetch` so the next snapshot fetch restores truth.
 */

import type {
  AlertRow,
  Annotation,
  Snapshot,
  StreamDelta,
  SystemRow,
} from "./types.js";

export type ViewName = "bars" | "map" | "pathway";
export type RoleFilter = "it" | "ot";

export interface AnnotationDraft {
  subject: string;
  text: string;
}

export class ViewModel {
  snapshot: Snapshot | null = null;
  /** Seq of the last applied delta; -1 before any delta. */
  lastSeq = -1;
  /** True when the client must refetch a snapshot to stay truthful. */
  needsRefetch = false;
  sessionLive = true;

  activeView: ViewName = "bars";
  roleFilter: RoleFilter = "it";
  selectedDevice: string | null = null;
  /** Optimistic state is allowed for drafts only, never for rule changes. */
  drafts: AnnotationDraft[] = [];

  /** Replace state wholesale from a served snapshot (initial load or refetch). */
  applySnapshot(snapshot: Snapshot): void {
    this.snapshot = structuredClone(snapshot);
    this.needsRefetch = false;
  }

  /**
   * Fold one stream delta. Returns false (and demands a refetch) when the
   * delta is out of order; deltas must arrive with contiguous seq.
   */
  applyDelta(delta: StreamDelta): boolean {
    if (this.lastSeq >= 0 && delta.seq !== this.lastSeq + 1) {
      this.needsRefetch = true;
      return false;
    }
    this.lastSeq = delta.seq;

    switch (delta.kind) {
      case "snapshot":
        this.applySnapshot(delta.data as unknown as Snapshot);
        break;
      case "anomaly":
        this.upsertSystem(delta.data as unknown as SystemRow);
        break;
      case "annotation":
        this.appendAnnotation(delta.data as unknown as Annotation);
        break;
      case "alert":
        this.appendAlert(delta.data as unknown as AlertRow);
        break;
      case "command":
        this.applyCommand(delta.data);
        break;
      case "rule-change":
        // Rule folding is the service reducer's job; refetch the truth.
        this.needsRefetch = true;
        break;
      case "session-end":
        this.sessionLive = false;
        break;
      default:
        break;
    }
    if (this.snapshot !== null && delta.tick > this.snapshot.tick) {
      this.snapshot.tick = delta.tick;
    }
    return true;
  }

  private upsertSystem(row: SystemRow): void {
    if (this.snapshot === null) return;
    const systems = this.snapshot.systems.filter((s) => s.system !== row.system);
    systems.push(structuredClone(row));
    systems.sort((a, b) => (a.system < b.system ? -1 : a.system > b.system ? 1 : 0));
    this.snapshot.systems = systems;
  }

  private appendAnnotation(annotation: Annotation): void {
    if (this.snapshot === null) return;
    this.snapshot.annotations.push(structuredClone(annotation));
    // Reconcile: a confirmed annotation clears its optimistic draft.
    this.drafts = this.drafts.filter(
      (d) => !(d.subject === annotation.subject && d.text === annotation.text),
    );
  }

  private appendAlert(alert: AlertRow): void {
    if (this.snapshot === null) return;
    this.snapshot.pending_alerts.push(structuredClone(alert));
    this.snapshot.pending_alerts.sort((a, b) =>
      a.tick !== b.tick ? a.tick - b.tick : a.id < b.id ? -1 : a.id > b.id ? 1 : 0,
    );
  }

  private applyCommand(data: Record<string, unknown>): void {
    const type = data["type"];
    if (type === "acknowledge") {
      if (this.snapshot !== null) {
        const alertId = data["alert"];
        this.snapshot.pending_alerts = this.snapshot.pending_alerts.filter(
          (a) => a.id !== alertId,
        );
      }
    } else if (type === "quarantine" || type === "release") {
      // The resulting rules arrive as rule-change records; refetch covers
      // clients that fold commands without replaying the whole stream.
      this.needsRefetch = true;
    }
  }
}
