/**
 * Render the typed views to SVG/HTML strings. Geometry and semantics live in
 * bars.ts / map.ts / pathway.ts; this layer only draws what those computed.
 */

import type { BarsView } from "./bars.js";
import type { MapView } from "./map.js";
import type { PathwayErrorView, PathwayView } from "./pathway.js";
import type { RoleFilter } from "./viewmodel.js";
import { partnerLabel } from "./pathway.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

const BUCKET_FILL: Record<string, string> = {
  green: "#2da44e",
  yellow: "#d4a72c",
  orange: "#e16f24",
  red: "#cf222e",
};

const BAR_AREA_WIDTH = 560;
const BAR_LABEL_WIDTH = 140;
const ROW_HEIGHT = 34;
const BAR_HEIGHT = 16;

function x(level: number): number {
  return BAR_LABEL_WIDTH + level * BAR_AREA_WIDTH;
}

export function barsToSvg(view: BarsView): string {
  const height = view.rows.length * ROW_HEIGHT + 30;
  const parts: string[] = [];
  parts.push(
    `<svg class="bars" viewBox="0 0 ${BAR_LABEL_WIDTH + BAR_AREA_WIDTH + 20} ${height}" ` +
      `xmlns="http://www.w3.org/2000/svg" role="img">`,
  );
  for (const [name, value] of Object.entries(view.thresholds)) {
    const tx = x(value);
    parts.push(
      `<line class="threshold threshold-${name}" x1="${tx}" y1="8" x2="${tx}" ` +
        `y2="${height - 22}" stroke="#656d76" stroke-dasharray="4 3"/>`,
      `<text x="${tx}" y="${height - 8}" font-size="10" fill="#656d76" ` +
        `text-anchor="middle">${name}</text>`,
    );
  }
  view.rows.forEach((row, index) => {
    const top = 12 + index * ROW_HEIGHT;
    const mid = top + BAR_HEIGHT / 2;
    const fill = BUCKET_FILL[row.bucket] ?? "#656d76";
    parts.push(
      `<g class="bar-row" data-system="${escapeHtml(row.system)}" data-stage="${row.stage}">`,
      `<text x="${BAR_LABEL_WIDTH - 8}" y="${mid + 4}" font-size="12" ` +
        `text-anchor="end">${escapeHtml(row.system)}</text>`,
      `<rect class="bar" x="${x(0)}" y="${top}" width="${row.level * BAR_AREA_WIDTH}" ` +
        `height="${BAR_HEIGHT}" fill="${fill}"/>`,
    );
    if (row.lineLength > 0) {
      parts.push(
        `<line class="forecast" x1="${x(row.lineFrom)}" y1="${mid}" ` +
          `x2="${x(row.lineTo)}" y2="${mid}" stroke="${fill}" stroke-width="2"/>`,
      );
    }
    if (row.arrow !== "none") {
      const direction = row.arrow === "up" ? 1 : -1;
      const tip = x(row.lineTo) + direction * 4;
      parts.push(
        `<path class="arrow arrow-${row.arrow}" d="M ${tip} ${mid} ` +
          `l ${-direction * (4 + 6 * row.arrowLength)} -4 l 0 8 z" fill="${fill}"/>`,
      );
    }
    parts.push(`</g>`);
  });
  parts.push(`</svg>`);
  return parts.join("");
}

export function mapToSvg(view: MapView): string {
  let maxX = 200;
  let maxY = 200;
  for (const marker of view.markers) {
    maxX = Math.max(maxX, marker.x + 60);
    maxY = Math.max(maxY, marker.y + 60);
  }
  const byAddress = new Map(view.markers.map((m) => [m.address, m]));
  const parts: string[] = [];
  parts.push(
    `<svg class="comm-map" viewBox="0 0 ${maxX} ${maxY}" ` +
      `xmlns="http://www.w3.org/2000/svg" role="img">`,
  );
  for (const connector of view.connectors) {
    const a = byAddress.get(connector.a);
    const b = byAddress.get(connector.b);
    if (a === undefined || b === undefined) continue;
    if (connector.thicknessAB > 0) {
      parts.push(
        `<line class="link" x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}" ` +
          `stroke="#8c959f" stroke-width="${connector.thicknessAB.toFixed(2)}" opacity="0.5"/>`,
      );
    }
    if (connector.thicknessBA > 0) {
      parts.push(
        `<line class="link" x1="${b.x}" y1="${b.y}" x2="${a.x}" y2="${a.y}" ` +
          `stroke="#8c959f" stroke-width="${connector.thicknessBA.toFixed(2)}" opacity="0.5"/>`,
      );
    }
  }
  for (const marker of view.markers) {
    parts.push(
      `<g class="entity" data-device="${escapeHtml(marker.deviceId)}" tabindex="0">`,
      `<circle class="recv" cx="${marker.x}" cy="${marker.y}" ` +
        `r="${marker.recvRadius.toFixed(2)}" fill="none" stroke="#0969da" stroke-width="1.5"/>`,
      `<circle class="sent" cx="${marker.x}" cy="${marker.y}" ` +
        `r="${marker.sentRadius.toFixed(2)}" fill="#0969da" fill-opacity="0.55"/>`,
      `<text x="${marker.x}" y="${marker.y - marker.recvRadius - 4}" font-size="10" ` +
        `text-anchor="middle">${escapeHtml(marker.deviceId)}</text>`,
      `</g>`,
    );
  }
  parts.push(`</svg>`);
  return parts.join("");
}

export function pathwayToHtml(
  view: PathwayView | PathwayErrorView,
  role: RoleFilter,
): string {
  if (view.kind === "error") {
    return (
      `<div class="pathway-error">` +
      `<p>${escapeHtml(view.message)}</p>` +
      `<button class="nav-back" data-view="${view.backTo}">back to map</button>` +
      `</div>`
    );
  }
  const parts: string[] = [];
  parts.push(`<div class="pathway" data-device="${escapeHtml(view.device.id)}">`);
  parts.push(
    `<h2>${escapeHtml(view.device.id)} <small>${escapeHtml(view.device.address)} · ` +
      `${escapeHtml(view.device.zone)}</small></h2>`,
  );
  parts.push(`<ul class="partners">`);
  for (const partner of view.partners) {
    const width = Math.round(partner.relative * 100);
    parts.push(
      `<li class="partner" data-address="${escapeHtml(partner.address)}">` +
        `<span class="label">${escapeHtml(partnerLabel(partner, role))}</span>` +
        `<span class="meter"><span class="fill" style="width:${width}%"></span></span>` +
        `<span class="bytes">${partner.bytesOut}↑ ${partner.bytesIn}↓</span>` +
        `</li>`,
    );
  }
  parts.push(`</ul>`);
  parts.push(`<div class="commands">`);
  for (const command of view.commands) {
    parts.push(
      `<button class="command ${command.type}" data-type="${command.type}" ` +
        `data-src="${escapeHtml(command.pair[0])}" data-dst="${escapeHtml(command.pair[1])}">` +
        `${command.type} ${escapeHtml(command.pair[0])}↔${escapeHtml(command.pair[1])}` +
        `</button>`,
    );
  }
  parts.push(`</div>`);
  parts.push(`<ul class="annotations">`);
  for (const note of view.annotations) {
    parts.push(
      `<li class="note"><b>${escapeHtml(note.author)}</b> @${note.tick}: ` +
        `${escapeHtml(note.text)}</li>`,
    );
  }
  parts.push(`</ul>`);
  parts.push(
    `<form class="annotation-composer">` +
      `<input name="text" placeholder="annotate ${escapeHtml(view.device.id)}…" required>` +
      `<button type="submit">add note</button>` +
      `</form>`,
  );
  parts.push(`</div>`);
  return parts.join("");
}
