import { describe, expect, it } from "vitest";

import { chartGeometry } from "../src/charts.js";
import type { PanelSpec } from "../src/layout.js";
import {
  renderEnergyBar,
  renderEventFeed,
  renderLineChart,
  renderStatusGrid,
} from "../src/panels.js";
import { SlidingWindow, TelemetryRecord } from "../src/records.js";

let nextId = 1;

function rec(patch: Partial<TelemetryRecord>): TelemetryRecord {
  return { id: nextId++, timestamp: 0, class: "sensor",
           device_id: "kitchen_th", zone_id: "kitchen", floor: 1,
           metric: "temperature", value: 21.0, ...patch };
}

function chartSpec(): PanelSpec {
  return { id: "c", kind: "line_chart", title: "t",
           filter: { floor: 1, metric: "temperature", recordClass: "sensor" },
           refresh: "stream" };
}

describe("line chart panel", () => {
  it("renders an empty state without data", () => {
    const view = renderLineChart(chartSpec(), new SlidingWindow());
    expect(view.geometry.empty).toBe(true);
  });

  it("shows measured series plus the stepped setpoint series", () => {
    const win = new SlidingWindow();
    for (let t = 0; t <= 20; t += 5) {
      win.push(rec({ timestamp: t, value: 20 + t / 10 }));
      win.push(rec({ timestamp: t, device_id: "dining_th", zone_id: "dining",
                     value: 21 }));
      win.push(rec({ timestamp: t, class: "event", floor: 0,
                     device_id: "controller_f1",
                     metric: "setpoint_temperature", value: 22.0 }));
    }
    const view = renderLineChart(chartSpec(), win);
    expect(view.geometry.empty).toBe(false);
    expect(view.seriesLabels).toContain("kitchen_th");
    expect(view.seriesLabels).toContain("dining_th");
    expect(view.seriesLabels).toContain("desired");
    expect(view.geometry.polylines).toHaveLength(3);
    for (const line of view.geometry.polylines) {
      expect(line.path.length).toBeGreaterThan(0);
    }
  });

  it("keeps only the sliding window in view", () => {
    const points: [number, number][] = [];
    for (let t = 0; t <= 7200; t += 60) points.push([t, 20]);
    const geometry = chartGeometry([{ label: "x", points }], 640, 220, 3600);
    expect(geometry.xMin).toBe(7200 - 3600);
    expect(geometry.xMax).toBe(7200);
  });
});

describe("status grid panel", () => {
  it("classifies servo fractions", () => {
    const win = new SlidingWindow();
    win.push(rec({ device_id: "front_door", metric: "door_state", value: 0.0 }));
    win.push(rec({ device_id: "garage_door", metric: "door_state", value: 1.0,
                   zone_id: "garage" }));
    win.push(rec({ device_id: "kitchen_door", metric: "door_state", value: 0.4 }));
    const spec: PanelSpec = { id: "s", kind: "status_grid", title: "doors",
                              filter: { metric: "door_state" },
                              refresh: "stream" };
    const view = renderStatusGrid(spec, win);
    const states = Object.fromEntries(view.cells.map((c) => [c.label, c.state]));
    expect(states["front_door"]).toBe("closed");
    expect(states["garage_door"]).toBe("open");
    expect(states["kitchen_door"]).toContain("moving");
  });
});

describe("event feed panel", () => {
  it("lists real events newest first and hides tick/setpoint noise", () => {
    const win = new SlidingWindow();
    win.push(rec({ class: "event", metric: "tick", value: 14,
                   device_id: "controller_f1", timestamp: 5 }));
    win.push(rec({ class: "event", metric: "setpoint_temperature", value: 22,
                   device_id: "controller_f1", timestamp: 5 }));
    win.push(rec({ class: "event", metric: "camera", value: true,
                   device_id: "front_camera", zone_id: "dining", timestamp: 10 }));
    win.push(rec({ class: "event", metric: "door_window", value: "open",
                   device_id: "front_door", zone_id: "dining", timestamp: 15 }));
    const spec: PanelSpec = { id: "e", kind: "event_feed", title: "events",
                              filter: { recordClass: "event" },
                              refresh: "stream" };
    const view = renderEventFeed(spec, win);
    expect(view.entries).toHaveLength(2);
    expect(view.entries[0].text).toContain("door_window");
    expect(view.entries[0].text).toContain("open");
    expect(view.entries[1].text).toContain("camera");
  });
});

describe("energy bar panel", () => {
  it("tracks current and peak electrical power", () => {
    const win = new SlidingWindow();
    for (const [t, w] of [[0, 100], [5, 250], [10, 180]] as const) {
      win.push(rec({ class: "energy", metric: "total_power_w",
                     device_id: "building", zone_id: "", floor: 0,
                     timestamp: t, value: w }));
    }
    const spec: PanelSpec = { id: "p", kind: "energy_bar", title: "power",
                              filter: { recordClass: "energy" },
                              refresh: "stream" };
    const view = renderEnergyBar(spec, win);
    expect(view.currentW).toBe(180);
    expect(view.peakW).toBe(250);
    expect(view.bars).toHaveLength(3);
  });
});
