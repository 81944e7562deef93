// Per-kind panel view model: what a panel shows given the record window.
// DOM-free so the render logic is testable; app.ts paints the results.

import { chartGeometry, ChartGeometry, numericPoints } from "./charts.js";
import type { PanelSpec } from "./layout.js";
import { SlidingWindow, TelemetryRecord } from "./records.js";

export const EMPTY_STATE_TEXT = "no data yet";

export interface GaugeView {
  kind: "gauge";
  value: number | null;
  unit: string;
  label: string;
}

export interface ChartView {
  kind: "line_chart";
  geometry: ChartGeometry;
  seriesLabels: string[];
}

export interface StatusGridView {
  kind: "status_grid";
  cells: { label: string; state: string }[];
}

export interface EventFeedView {
  kind: "event_feed";
  entries: { timestamp: number; text: string }[];
}

export interface EnergyBarView {
  kind: "energy_bar";
  currentW: number | null;
  peakW: number;
  bars: { timestamp: number; watts: number }[];
}

export type PanelView =
  | GaugeView | ChartView | StatusGridView | EventFeedView | EnergyBarView;

const METRIC_UNITS: Record<string, string> = {
  temperature: "degC",
  humidity: "%RH",
  duty: "",
  level: "",
};

function setpointMetricFor(metric: string | undefined): string | null {
  if (metric === "temperature") return "setpoint_temperature";
  if (metric === "humidity") return "setpoint_humidity";
  return null;
}

export function renderLineChart(spec: PanelSpec, window: SlidingWindow,
                                widthPx = 640): ChartView {
  const records = window.select(spec.filter);
  const byDevice = new Map<string, TelemetryRecord[]>();
  for (const r of records) {
    const list = byDevice.get(r.device_id) ?? [];
    list.push(r);
    byDevice.set(r.device_id, list);
  }
  const series = [...byDevice.entries()].map(([device, rs]) => ({
    label: device,
    points: numericPoints(rs),
  }));
  // measured values plus the active setpoint as a stepped series
  const refMetric = setpointMetricFor(spec.filter.metric);
  if (refMetric !== null && spec.filter.floor !== undefined) {
    const refs = window.select({
      metric: refMetric,
      device: `controller_f${spec.filter.floor}`,
      recordClass: "event",
    });
    if (refs.length > 0) {
      series.push({ label: "desired", points: numericPoints(refs),
                    step: true } as never);
    }
  }
  return {
    kind: "line_chart",
    geometry: chartGeometry(series, widthPx, 220),
    seriesLabels: series.map((s) => s.label),
  };
}

export function renderGauge(spec: PanelSpec, window: SlidingWindow): GaugeView {
  const latest = window.latest(spec.filter);
  const value = latest && typeof latest.value === "number" ? latest.value : null;
  return {
    kind: "gauge",
    value,
    unit: METRIC_UNITS[spec.filter.metric ?? ""] ?? "",
    label: latest ? latest.device_id : EMPTY_STATE_TEXT,
  };
}

export function renderStatusGrid(spec: PanelSpec,
                                 window: SlidingWindow): StatusGridView {
  const metric = spec.filter.metric;
  const wanted = metric === undefined
    ? ["door_state", "window_state"]
    : [metric];
  const cells: { label: string; state: string }[] = [];
  const seen = new Set<string>();
  for (const m of wanted) {
    for (const r of window.select({ ...spec.filter, metric: m })) {
      seen.add(r.device_id);
    }
    for (const device of [...seen].sort()) {
      const latest = window.latest({ ...spec.filter, metric: m, device });
      if (!latest || typeof latest.value !== "number") continue;
      const state = latest.value >= 1.0 ? "open"
        : latest.value <= 0.0 ? "closed"
        : `moving (${Math.round(latest.value * 100)}%)`;
      cells.push({ label: device, state });
    }
    seen.clear();
  }
  return { kind: "status_grid", cells };
}

export function renderEventFeed(spec: PanelSpec, window: SlidingWindow,
                                limit = 30): EventFeedView {
  const events = window.select({ ...spec.filter, recordClass: "event" })
    .filter((r) => r.metric !== "tick"
      && !r.metric.startsWith("setpoint"))
    .slice(-limit)
    .reverse();
  return {
    kind: "event_feed",
    entries: events.map((r) => ({
      timestamp: r.timestamp,
      text: `${r.metric} ${r.device_id}${r.zone_id ? " @ " + r.zone_id : ""}`
        + (typeof r.value === "string" ? `: ${r.value}` : ""),
    })),
  };
}

export function renderEnergyBar(spec: PanelSpec, window: SlidingWindow,
                                bars = 40): EnergyBarView {
  const records = window.select({ recordClass: "energy" }).slice(-bars);
  const series = records
    .filter((r) => typeof r.value === "number")
    .map((r) => ({ timestamp: r.timestamp, watts: r.value as number }));
  return {
    kind: "energy_bar",
    currentW: series.length ? series[series.length - 1].watts : null,
    peakW: series.reduce((max, b) => Math.max(max, b.watts), 0),
    bars: series,
  };
}
