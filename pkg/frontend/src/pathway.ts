/**
 * Pathway view: the communication partners of one device with the relative
 * volume moved to and from each, the device's annotation log and composer,
 * and the quarantine/release actions for each zone crossing the device is
 * part of. An unknown device renders a navigable error state instead.
 */

import type { Annotation, DeviceRow, Snapshot } from "./types.js";
import type { RoleFilter } from "./viewmodel.js";

export interface PathwayPartner {
  address: string;
  /** Device id when the partner is a plant device, null for outside hosts. */
  deviceId: string | null;
  zone: string | null;
  bytesOut: number;
  bytesIn: number;
  /** (out + in) relative to the busiest partner, in [0, 1]. */
  relative: number;
}

export interface PathwayCommand {
  type: "quarantine" | "release";
  pair: [string, string];
}

export interface PathwayView {
  kind: "pathway";
  device: DeviceRow;
  partners: PathwayPartner[];
  annotations: Annotation[];
  /** One quarantine + one release per zone crossing this device is on. */
  commands: PathwayCommand[];
}

export interface PathwayErrorView {
  kind: "error";
  deviceId: string;
  message: string;
  /** The error state stays navigable: the UI offers this view to return to. */
  backTo: "map";
}

export function renderPathway(
  snapshot: Snapshot,
  deviceId: string,
): PathwayView | PathwayErrorView {
  const device = snapshot.devices.find((d) => d.id === deviceId);
  if (device === undefined) {
    return {
      kind: "error",
      deviceId,
      message: `unknown device: ${deviceId}`,
      backTo: "map",
    };
  }

  const byAddress = new Map(snapshot.devices.map((d) => [d.address, d]));
  const edges = snapshot.partners[device.address] ?? [];
  const maxVolume = edges.reduce(
    (top, edge) => Math.max(top, edge.sent + edge.recv),
    0,
  );

  const partners: PathwayPartner[] = edges.map((edge) => {
    const peer = byAddress.get(edge.partner);
    return {
      address: edge.partner,
      deviceId: peer?.id ?? null,
      zone: peer?.zone ?? null,
      bytesOut: edge.sent,
      bytesIn: edge.recv,
      relative: maxVolume > 0 ? (edge.sent + edge.recv) / maxVolume : 0,
    };
  });

  const crossings = new Set<string>();
  for (const partner of partners) {
    if (partner.zone !== null && partner.zone !== device.zone) {
      crossings.add(partner.zone);
    }
  }
  const commands: PathwayCommand[] = [...crossings]
    .sort()
    .flatMap((zone): PathwayCommand[] => [
      { type: "quarantine", pair: [device.zone, zone] },
      { type: "release", pair: [device.zone, zone] },
    ]);

  return {
    kind: "pathway",
    device,
    partners,
    annotations: snapshot.annotations.filter((a) => a.subject === device.id),
    commands,
  };
}

/** Role filter: cyber analysts read addresses, operators read device names. */
export function partnerLabel(partner: PathwayPartner, role: RoleFilter): string {
  if (role === "ot" && partner.deviceId !== null) return partner.deviceId;
  return partner.address;
}
