// Dashboard layout: the ordered panel list, its local persistence, panel
// editing (add / remove / reorder via the picker), filter validation
// against the building summary, and the responsive breakpoints.

import type { BuildingSummary } from "./api.js";
import type { RecordFilter } from "./records.js";

export type PanelKind =
  | "line_chart"
  | "gauge"
  | "status_grid"
  | "event_feed"
  | "energy_bar"
  | "control_card";

export const PANEL_KINDS: PanelKind[] = [
  "line_chart", "gauge", "status_grid", "event_feed", "energy_bar",
  "control_card",
];

export interface PanelSpec {
  id: string;
  kind: PanelKind;
  title: string;
  filter: RecordFilter;
  /** control cards name the device they drive */
  device?: string;
  refresh: "stream" | "poll";
}

export type BreakpointClass = "phone" | "laptop" | "tv";

/** Three documented breakpoints: below 768 px a single column, below
 * 1600 px the laptop grid, anything wider the TV wall. */
export function breakpointClass(viewportWidth: number): BreakpointClass {
  if (viewportWidth < 768) return "phone";
  if (viewportWidth < 1600) return "laptop";
  return "tv";
}

export const GRID_COLUMNS: Record<BreakpointClass, number> = {
  phone: 1,
  laptop: 3,
  tv: 6,
};

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

const STORAGE_KEY = "smartbuilding.dashboard.layout.v1";

export class LayoutValidationError extends Error {}

export function validatePanelSpec(spec: PanelSpec,
                                  building: BuildingSummary): void {
  const zones = new Map(
    building.floors.flatMap((f) => f.zones.map((z) => [z.id, z] as const)));
  const floors = new Set(building.floors.map((f) => f.index));
  const devices = new Set(
    building.floors.flatMap((f) =>
      f.zones.flatMap((z) => z.devices.map((d) => d.id))));
  if (!PANEL_KINDS.includes(spec.kind)) {
    throw new LayoutValidationError(`unknown panel kind '${spec.kind}'`);
  }
  if (spec.filter.zone !== undefined && !zones.has(spec.filter.zone)) {
    throw new LayoutValidationError(`unknown zone '${spec.filter.zone}'`);
  }
  if (spec.filter.floor !== undefined && !floors.has(spec.filter.floor)) {
    throw new LayoutValidationError(`unknown floor '${spec.filter.floor}'`);
  }
  if (spec.filter.device !== undefined && !devices.has(spec.filter.device)) {
    throw new LayoutValidationError(`unknown device '${spec.filter.device}'`);
  }
  if (spec.device !== undefined && !devices.has(spec.device)) {
    throw new LayoutValidationError(`unknown device '${spec.device}'`);
  }
}

export class DashboardLayout {
  panels: PanelSpec[] = [];
  breakpoint: BreakpointClass = "laptop";

  constructor(private readonly storage: StorageLike) {}

  /** Restore the persisted layout; returns false when none existed. */
  restore(): boolean {
    const raw = this.storage.getItem(STORAGE_KEY);
    if (raw === null) return false;
    try {
      const doc = JSON.parse(raw) as { panels?: PanelSpec[] };
      this.panels = Array.isArray(doc.panels) ? doc.panels : [];
      return true;
    } catch {
      this.panels = [];
      return false;
    }
  }

  persist(): void {
    this.storage.setItem(STORAGE_KEY, JSON.stringify({ panels: this.panels }));
  }

  addPanel(spec: PanelSpec, building: BuildingSummary): void {
    validatePanelSpec(spec, building);
    if (this.panels.some((p) => p.id === spec.id)) {
      throw new LayoutValidationError(`panel id '${spec.id}' already exists`);
    }
    this.panels.push(spec);
    this.persist();
  }

  removePanel(id: string): void {
    this.panels = this.panels.filter((p) => p.id !== id);
    this.persist();
  }

  movePanel(id: string, offset: number): void {
    const from = this.panels.findIndex((p) => p.id === id);
    if (from < 0) return;
    const to = Math.min(Math.max(from + offset, 0), this.panels.length - 1);
    const [spec] = this.panels.splice(from, 1);
    this.panels.splice(to, 0, spec);
    this.persist();
  }

  setViewport(widthPx: number): BreakpointClass {
    this.breakpoint = breakpointClass(widthPx);
    return this.breakpoint;
  }
}

/** Starter layout shown on first visit: one chart, humidity, the event
 * feed, energy, and a floor-1 setpoint card. */
export function defaultPanels(): PanelSpec[] {
  return [
    { id: "f1-temp", kind: "line_chart", title: "Floor 1 temperature",
      filter: { floor: 1, metric: "temperature", recordClass: "sensor" },
      refresh: "stream" },
    { id: "f1-hum", kind: "line_chart", title: "Floor 1 humidity",
      filter: { floor: 1, metric: "humidity", recordClass: "sensor" },
      refresh: "stream" },
    { id: "doors", kind: "status_grid", title: "Doors and windows",
      filter: { recordClass: "sensor", metric: "door_state" },
      refresh: "stream" },
    { id: "events", kind: "event_feed", title: "Events",
      filter: { recordClass: "event" }, refresh: "stream" },
    { id: "energy", kind: "energy_bar", title: "Electrical power",
      filter: { recordClass: "energy" }, refresh: "stream" },
    { id: "f1-setpoint", kind: "control_card", title: "Floor 1 setpoint",
      filter: { floor: 1 }, refresh: "stream" },
  ];
}
