// Pure chart geometry: series records in, SVG polyline coordinates out.
// Keeping this free of DOM calls makes the sliding-window chart testable.

import type { TelemetryRecord } from "./records.js";

export interface ChartSeries {
  label: string;
  points: [number, number][];   // (timestamp, value)
  step?: boolean;               // setpoints render as steps
}

export interface ChartGeometry {
  width: number;
  height: number;
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
  polylines: { label: string; path: string }[];
  empty: boolean;
}

export function numericPoints(records: TelemetryRecord[]): [number, number][] {
  const points: [number, number][] = [];
  for (const r of records) {
    if (typeof r.value === "number") points.push([r.timestamp, r.value]);
  }
  return points;
}

export function chartGeometry(series: ChartSeries[], width = 640, height = 240,
                              windowS = 3600, now?: number): ChartGeometry {
  const all = series.flatMap((s) => s.points);
  if (all.length === 0) {
    return { width, height, xMin: 0, xMax: 1, yMin: 0, yMax: 1,
             polylines: [], empty: true };
  }
  const newest = now ?? Math.max(...all.map((p) => p[0]));
  const xMin = newest - windowS;
  const xMax = Math.max(newest, xMin + 1);
  const visible = all.filter((p) => p[0] >= xMin);
  const ys = (visible.length ? visible : all).map((p) => p[1]);
  let yMin = Math.min(...ys);
  let yMax = Math.max(...ys);
  if (yMax - yMin < 1e-9) {
    yMin -= 0.5;
    yMax += 0.5;
  }
  const pad = (yMax - yMin) * 0.08;
  yMin -= pad;
  yMax += pad;

  const sx = (t: number) => ((t - xMin) / (xMax - xMin)) * width;
  const sy = (v: number) => height - ((v - yMin) / (yMax - yMin)) * height;

  const polylines = series.map((s) => {
    const pts = s.points.filter((p) => p[0] >= xMin);
    const coords: string[] = [];
    let prev: [number, number] | null = null;
    for (const [t, v] of pts) {
      if (s.step && prev !== null) {
        coords.push(`${sx(t).toFixed(1)},${sy(prev[1]).toFixed(1)}`);
      }
      coords.push(`${sx(t).toFixed(1)},${sy(v).toFixed(1)}`);
      prev = [t, v];
    }
    return { label: s.label, path: coords.join(" ") };
  });

  return { width, height, xMin, xMax, yMin, yMax, polylines, empty: false };
}
