/**
 * Communication map view: two concentric circles per communicating entity —
 * the solid circle's area tracks bytes sent, the outline circle's area
 * tracks bytes received — placed at the device's map coordinates, with a
 * connector per communicating pair weighted by the raw bytes moved in each
 * direction. Entities with no traffic keep a minimum-size, still-selectable
 * marker. Devices without usable coordinates get a deterministic circular
 * layout.
 */

import type { DeviceRow, Snapshot, TrafficRow } from "./types.js";

export interface MapMarker {
  deviceId: string;
  address: string;
  zone: string;
  x: number;
  y: number;
  sentBytes: number;
  recvBytes: number;
  /** Radii in pixels; area above the minimum marker is ∝ bytes. */
  sentRadius: number;
  recvRadius: number;
  selectable: true;
}

export interface MapConnector {
  a: string;
  b: string;
  /** Raw directional volumes (bytes a→b and b→a). */
  weightAB: number;
  weightBA: number;
  /** Stroke widths in pixels, proportional to the volumes. */
  thicknessAB: number;
  thicknessBA: number;
}

export interface MapView {
  markers: MapMarker[];
  connectors: MapConnector[];
}

export interface MapOptions {
  minRadius: number;
  maxRadius: number;
  maxThickness: number;
}

export const DEFAULT_MAP_OPTIONS: MapOptions = {
  minRadius: 4,
  maxRadius: 26,
  maxThickness: 6,
};

interface AddressTotals {
  sent: number;
  recv: number;
}

function totalsByAddress(traffic: TrafficRow[]): Map<string, AddressTotals> {
  const totals = new Map<string, AddressTotals>();
  for (const row of traffic) {
    const entry = totals.get(row.src) ?? { sent: 0, recv: 0 };
    entry.sent += row.sent;
    entry.recv += row.recv;
    totals.set(row.src, entry);
  }
  return totals;
}

function radiusFor(bytes: number, maxBytes: number, options: MapOptions): number {
  if (bytes <= 0 || maxBytes <= 0) return options.minRadius;
  // Area ∝ bytes: radius grows with the square root.
  const unit = Math.sqrt(bytes / maxBytes);
  return options.minRadius + (options.maxRadius - options.minRadius) * unit;
}

function hasUsableCoordinates(device: DeviceRow): boolean {
  return Number.isFinite(device.x) && Number.isFinite(device.y);
}

/** Deterministic fallback: devices on a circle, in id order. */
export function fallbackLayout(devices: DeviceRow[]): Map<string, { x: number; y: number }> {
  const sorted = [...devices].sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
  const radius = 60 + 24 * sorted.length;
  const layout = new Map<string, { x: number; y: number }>();
  sorted.forEach((device, index) => {
    const angle = (2 * Math.PI * index) / Math.max(1, sorted.length);
    layout.set(device.id, {
      x: Math.round(radius + radius * Math.cos(angle)),
      y: Math.round(radius + radius * Math.sin(angle)),
    });
  });
  return layout;
}

export function renderCommMap(
  snapshot: Snapshot,
  options: MapOptions = DEFAULT_MAP_OPTIONS,
): MapView {
  const totals = totalsByAddress(snapshot.traffic);
  let maxBytes = 0;
  for (const entry of totals.values()) {
    maxBytes = Math.max(maxBytes, entry.sent, entry.recv);
  }

  const needFallback = snapshot.devices.some((device) => !hasUsableCoordinates(device));
  const layout = needFallback ? fallbackLayout(snapshot.devices) : null;

  const markers: MapMarker[] = snapshot.devices.map((device) => {
    const entry = totals.get(device.address) ?? { sent: 0, recv: 0 };
    const position = layout?.get(device.id) ?? { x: device.x, y: device.y };
    return {
      deviceId: device.id,
      address: device.address,
      zone: device.zone,
      x: position.x,
      y: position.y,
      sentBytes: entry.sent,
      recvBytes: entry.recv,
      sentRadius: radiusFor(entry.sent, maxBytes, options),
      recvRadius: radiusFor(entry.recv, maxBytes, options),
      selectable: true,
    };
  });

  let maxPairBytes = 0;
  for (const row of snapshot.traffic) {
    maxPairBytes = Math.max(maxPairBytes, row.sent);
  }
  const thicknessFor = (bytes: number): number =>
    maxPairBytes > 0 && bytes > 0
      ? Math.max(0.5, (bytes / maxPairBytes) * options.maxThickness)
      : 0;

  const seen = new Set<string>();
  const connectors: MapConnector[] = [];
  for (const row of snapshot.traffic) {
    const [a, b] = row.src < row.dst ? [row.src, row.dst] : [row.dst, row.src];
    const key = `${a}|${b}`;
    if (seen.has(key)) continue;
    seen.add(key);
    const forward = snapshot.traffic.find((r) => r.src === a && r.dst === b);
    const backward = snapshot.traffic.find((r) => r.src === b && r.dst === a);
    const weightAB = forward?.sent ?? 0;
    const weightBA = backward?.sent ?? 0;
    if (weightAB === 0 && weightBA === 0) continue;
    connectors.push({
      a,
      b,
      weightAB,
      weightBA,
      thicknessAB: thicknessFor(weightAB),
      thicknessBA: thicknessFor(weightBA),
    });
  }
  connectors.sort((x, y) => (x.a < y.a ? -1 : x.a > y.a ? 1 : x.b < y.b ? -1 : 1));

  return { markers, connectors };
}
