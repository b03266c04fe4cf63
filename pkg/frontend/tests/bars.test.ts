import { describe, expect, it } from "vitest";

import {
  DEFAULT_THRESHOLDS,
  colorBucket,
  renderAnomalyBars,
  renderBarRow,
} from "../src/bars.js";
import { loadFixture, makeSnapshot, makeSystem } from "./helpers.js";

describe("threshold crossing", () => {
  it("marks the act line as crossed at level 0.6", () => {
    const row = renderBarRow(
      makeSystem({ level: 0.6, stage: "act" }),
      DEFAULT_THRESHOLDS,
    );
    expect(row.crossed).toContain("act");
    expect(row.crossed).toContain("watch");
    expect(row.crossed).not.toContain("emergency");
    expect(row.bucket).toBe("orange");
  });

  it("treats reaching a threshold exactly as crossing it", () => {
    const row = renderBarRow(makeSystem({ level: 0.5 }), DEFAULT_THRESHOLDS);
    expect(row.crossed).toEqual(["watch", "act"]);
  });

  it("crosses nothing below the watch line", () => {
    const row = renderBarRow(makeSystem({ level: 0.2 }), DEFAULT_THRESHOLDS);
    expect(row.crossed).toEqual([]);
    expect(row.bucket).toBe("green");
  });

  it("buckets colors on the stage scale", () => {
    expect(colorBucket(0.0, DEFAULT_THRESHOLDS)).toBe("green");
    expect(colorBucket(0.25, DEFAULT_THRESHOLDS)).toBe("yellow");
    expect(colorBucket(0.49, DEFAULT_THRESHOLDS)).toBe("yellow");
    expect(colorBucket(0.5, DEFAULT_THRESHOLDS)).toBe("orange");
    expect(colorBucket(0.75, DEFAULT_THRESHOLDS)).toBe("red");
    expect(colorBucket(1.0, DEFAULT_THRESHOLDS)).toBe("red");
  });
});

describe("velocity arrow and forecast line", () => {
  it("shows no arrow and a zero-length line when the system is flat", () => {
    const row = renderBarRow(
      makeSystem({ level: 0.4, velocity: 0, forecast: 0.4 }),
      DEFAULT_THRESHOLDS,
    );
    expect(row.arrow).toBe("none");
    expect(row.arrowLength).toBe(0);
    expect(row.lineLength).toBe(0);
  });

  it("points the arrow with the velocity sign", () => {
    const up = renderBarRow(makeSystem({ velocity: 0.01 }), DEFAULT_THRESHOLDS);
    const down = renderBarRow(makeSystem({ velocity: -0.01 }), DEFAULT_THRESHOLDS);
    expect(up.arrow).toBe("up");
    expect(down.arrow).toBe("down");
    expect(up.arrowLength).toBeCloseTo(0.25, 10);
    expect(up.arrowLength).toBe(down.arrowLength);
  });

  it("caps the arrow length at full width", () => {
    const row = renderBarRow(makeSystem({ velocity: 9 }), DEFAULT_THRESHOLDS);
    expect(row.arrowLength).toBe(1);
  });

  it("runs the thin line from the bar tip to the forecast", () => {
    const row = renderBarRow(
      makeSystem({ level: 0.3, forecast: 0.45 }),
      DEFAULT_THRESHOLDS,
    );
    expect(row.lineFrom).toBe(0.3);
    expect(row.lineTo).toBe(0.45);
    expect(row.lineLength).toBeCloseTo(0.15, 10);
  });
});

describe("whole view", () => {
  it("renders one row per monitored system", () => {
    const snapshot = makeSnapshot({
      systems: [
        makeSystem({ system: "fb-bus", level: 0.1 }),
        makeSystem({ system: "fb-star", level: 0.9, stage: "emergency" }),
      ],
    });
    const view = renderAnomalyBars(snapshot);
    expect(view.rows.map((r) => r.system)).toEqual(["fb-bus", "fb-star"]);
    expect(view.thresholds).toEqual(DEFAULT_THRESHOLDS);
  });

  it("renders the recorded service snapshot", () => {
    const view = renderAnomalyBars(loadFixture());
    expect(view.rows.length).toBeGreaterThanOrEqual(3);
    const star = view.rows.find((r) => r.system === "fb-star");
    expect(star).toBeDefined();
    expect(star?.stage).toBe("emergency");
    expect(star?.bucket).toBe("red");
    expect(star?.crossed).toEqual(["watch", "act", "emergency"]);
    for (const row of view.rows) {
      expect(row.level).toBeGreaterThanOrEqual(0);
      expect(row.level).toBeLessThanOrEqual(1);
      expect(row.lineTo).toBe(row.forecast);
    }
  });
});
