/**
 * Browser entry point: wires the API client, the view model, and the
 * renderers into the page. Single-threaded: one stream subscription feeds
 * the model, renders happen on a frame callback, and every user action
 * issues exactly one POST. Optimistic display is limited to annotation
 * drafts — rule changes render only once the service confirms them.
 */

import { ApiClient } from "./api.js";
import { renderAnomalyBars } from "./bars.js";
import { renderCommMap } from "./map.js";
import { renderPathway } from "./pathway.js";
import { barsToSvg, escapeHtml, mapToSvg, pathwayToHtml } from "./svg.js";
import { ViewModel, type ViewName } from "./viewmodel.js";

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get("api");
  return override ?? window.location.origin;
}

export class DashboardApp {
  readonly model = new ViewModel();
  private renderQueued = false;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  async start(): Promise<void> {
    this.bindEvents();
    await this.refetchSnapshot();
    void this.consumeStream();
    this.queueRender();
  }

  private async refetchSnapshot(): Promise<void> {
    this.model.applySnapshot(await this.api.getSnapshot());
    this.queueRender();
  }

  private async consumeStream(): Promise<void> {
    while (this.model.sessionLive) {
      try {
        for await (const delta of this.api.streamDeltas({
          fromSeq: this.model.lastSeq + 1,
        })) {
          const applied = this.model.applyDelta(delta);
          if (!applied || this.model.needsRefetch) {
            await this.refetchSnapshot();
          }
          this.queueRender();
        }
        return; // stream closed: session finished
      } catch {
        await new Promise((resolve) => setTimeout(resolve, 1000));
        await this.refetchSnapshot();
      }
    }
  }

  private bindEvents(): void {
    this.root.addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      const tab = target.closest<HTMLElement>("[data-tab]");
      if (tab !== null) {
        this.model.activeView = tab.dataset["tab"] as ViewName;
        this.queueRender();
        return;
      }
      const entity = target.closest<HTMLElement>(".entity[data-device]");
      if (entity !== null) {
        this.model.selectedDevice = entity.dataset["device"] ?? null;
        this.model.activeView = "pathway";
        this.queueRender();
        return;
      }
      const back = target.closest<HTMLElement>(".nav-back[data-view]");
      if (back !== null) {
        this.model.activeView = back.dataset["view"] as ViewName;
        this.queueRender();
        return;
      }
      const roleToggle = target.closest<HTMLElement>("[data-role-toggle]");
      if (roleToggle !== null) {
        this.model.roleFilter = this.model.roleFilter === "it" ? "ot" : "it";
        this.queueRender();
        return;
      }
      const command = target.closest<HTMLButtonElement>("button.command");
      if (command !== null) {
        void this.issuePairCommand(command);
        return;
      }
      const ack = target.closest<HTMLButtonElement>("button.acknowledge");
      if (ack !== null && ack.dataset["alert"] !== undefined) {
        void this.api.postCommand({ type: "acknowledge", alert: ack.dataset["alert"] });
        return;
      }
    });

    this.root.addEventListener("submit", (event) => {
      const form = event.target as HTMLFormElement;
      if (!form.classList.contains("annotation-composer")) return;
      event.preventDefault();
      const subject = this.model.selectedDevice;
      const input = form.elements.namedItem("text") as HTMLInputElement;
      if (subject === null || input.value === "") return;
      const draft = { subject, text: input.value };
      this.model.drafts.push(draft); // optimistic: drafts only
      input.value = "";
      void this.api
        .postAnnotation(draft)
        .catch(() => {
          this.model.drafts = this.model.drafts.filter((d) => d !== draft);
        })
        .finally(() => this.queueRender());
      this.queueRender();
    });
  }

  private async issuePairCommand(button: HTMLButtonElement): Promise<void> {
    const type = button.dataset["type"];
    const src = button.dataset["src"];
    const dst = button.dataset["dst"];
    if ((type !== "quarantine" && type !== "release") || !src || !dst) return;
    button.disabled = true;
    try {
      // One click, one POST; the resulting rules arrive via the stream.
      await this.api.postCommand({ type, pair: [src, dst] });
    } finally {
      button.disabled = false;
    }
  }

  private queueRender(): void {
    if (this.renderQueued) return;
    this.renderQueued = true;
    requestAnimationFrame(() => {
      this.renderQueued = false;
      this.render();
    });
  }

  private render(): void {
    const snapshot = this.model.snapshot;
    if (snapshot === null) {
      this.root.innerHTML = `<p class="loading">loading session…</p>`;
      return;
    }
    const header =
      `<header>` +
      `<nav>` +
      (["bars", "map", "pathway"] as const)
        .map(
          (view) =>
            `<button data-tab="${view}" class="${view === this.model.activeView ? "active" : ""}">` +
            `${view}</button>`,
        )
        .join("") +
      `</nav>` +
      `<span class="tick">tick ${snapshot.tick}${this.model.sessionLive ? "" : " (ended)"}</span>` +
      `<button data-role-toggle>view: ${this.model.roleFilter.toUpperCase()}</button>` +
      `</header>`;

    let body: string;
    if (this.model.activeView === "bars") {
      body = barsToSvg(renderAnomalyBars(snapshot));
    } else if (this.model.activeView === "map") {
      body = mapToSvg(renderCommMap(snapshot));
    } else {
      const deviceId = this.model.selectedDevice ?? snapshot.devices[0]?.id ?? "";
      body = pathwayToHtml(renderPathway(snapshot, deviceId), this.model.roleFilter);
      if (this.model.drafts.length > 0) {
        body += `<ul class="drafts">${this.model.drafts
          .map((d) => `<li class="draft">sending: ${escapeHtml(d.text)}</li>`)
          .join("")}</ul>`;
      }
    }

    const alerts =
      snapshot.pending_alerts.length > 0
        ? `<aside class="alerts">` +
          snapshot.pending_alerts
            .map(
              (alert) =>
                `<div class="alert sev-${escapeHtml(alert.severity)}">` +
                `${escapeHtml(alert.id)} ${escapeHtml(alert.rule)} → ${escapeHtml(alert.subject)}` +
                `<button class="acknowledge" data-alert="${escapeHtml(alert.id)}">ack</button>` +
                `</div>`,
            )
            .join("") +
          `</aside>`
        : "";

    this.root.innerHTML = header + `<main>` + body + `</main>` + alerts;
  }
}

if (typeof document !== "undefined" && document.getElementById("dashboard") !== null) {
  const root = document.getElementById("dashboard") as HTMLElement;
  const app = new DashboardApp(new ApiClient(apiBase()), root);
  void app.start();
}
