import { describe, expect, it } from "vitest";

import { SlidingWindow, TelemetryRecord } from "../src/records.js";

let nextId = 1;

function rec(patch: Partial<TelemetryRecord> = {}): TelemetryRecord {
  return {
    id: nextId++,
    timestamp: 0,
    class: "sensor",
    device_id: "kitchen_th",
    zone_id: "kitchen",
    floor: 1,
    metric: "temperature",
    value: 21.0,
    ...patch,
  };
}

describe("SlidingWindow", () => {
  it("keeps records ordered and deduplicates by id", () => {
    const win = new SlidingWindow(3600);
    const a = rec({ timestamp: 10 });
    expect(win.push(a)).toBe(true);
    expect(win.push(a)).toBe(false);
    win.push(rec({ timestamp: 5 }));   // late arrival
    win.push(rec({ timestamp: 20 }));
    expect(win.all().map((r) => r.timestamp)).toEqual([5, 10, 20]);
  });

  it("drops records older than the horizon", () => {
    const win = new SlidingWindow(100);
    for (let t = 0; t <= 300; t += 10) win.push(rec({ timestamp: t }));
    expect(win.all().every((r) => r.timestamp >= 200)).toBe(true);
    expect(win.size()).toBe(11);
  });

  it("merges history backfill without duplicating streamed records", () => {
    const win = new SlidingWindow(3600);
    const streamed = rec({ timestamp: 50 });
    win.push(streamed);
    const history = [rec({ timestamp: 40 }), streamed, rec({ timestamp: 45 })];
    expect(win.backfill(history)).toBe(2);
    expect(win.size()).toBe(3);
  });

  it("selects by filter and finds the latest per filter", () => {
    const win = new SlidingWindow(3600);
    win.push(rec({ timestamp: 1, metric: "temperature", value: 20 }));
    win.push(rec({ timestamp: 2, metric: "humidity", value: 50 }));
    win.push(rec({ timestamp: 3, metric: "temperature", value: 21 }));
    win.push(rec({ timestamp: 3, zone_id: "living", floor: 2, value: 19 }));
    expect(win.select({ metric: "temperature", zone: "kitchen" })).toHaveLength(2);
    expect(win.latest({ metric: "temperature", zone: "kitchen" })?.value).toBe(21);
    expect(win.select({ floor: 2 })).toHaveLength(1);
    expect(win.latest({ metric: "co2" })).toBeUndefined();
  });
});
