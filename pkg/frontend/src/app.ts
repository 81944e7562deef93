// Dashboard entry point: wires the gateway API, the shared record stream,
// the persisted layout and the panel renderers into the page.

import { BuildingSummary, GatewayApi } from "./api.js";
import { ControlCard } from "./control.js";
import { clear, el, svgEl, toast } from "./dom.js";
import {
  DashboardLayout,
  GRID_COLUMNS,
  LayoutValidationError,
  PANEL_KINDS,
  PanelKind,
  PanelSpec,
  defaultPanels,
} from "./layout.js";
import {
  EMPTY_STATE_TEXT,
  renderEnergyBar,
  renderEventFeed,
  renderGauge,
  renderLineChart,
  renderStatusGrid,
} from "./panels.js";
import { SlidingWindow } from "./records.js";
import { StreamClient } from "./stream.js";

const HISTORY_BACKFILL_S = 3600;

class Dashboard {
  readonly api = new GatewayApi("");
  readonly window = new SlidingWindow(HISTORY_BACKFILL_S);
  readonly layout = new DashboardLayout(localStorage);
  building!: BuildingSummary;
  stream!: StreamClient;
  private cards = new Map<string, ControlCard>();
  private dirty = false;

  async boot(): Promise<void> {
    this.building = await this.api.building();
    if (!this.layout.restore() || this.layout.panels.length === 0) {
      this.layout.panels = defaultPanels();
      this.layout.persist();
    }
    this.applyBreakpoint();
    window.addEventListener("resize", () => this.applyBreakpoint());

    this.stream = new StreamClient(
      () => new WebSocket(this.api.streamUrl({})) as never);
    this.stream.onRecord((record) => {
      this.window.push(record);
      for (const card of this.cards.values()) card.observe(record);
      this.dirty = true;
    });
    this.stream.onState((state) => {
      const banner = document.getElementById("stream-state");
      if (banner) {
        banner.textContent = state === "open" ? "" : `stream ${state}...`;
        banner.className = state === "open" ? "hidden" : "banner";
      }
    });
    this.stream.start();

    try {
      const history = await this.api.telemetry({
        start: 0, end: Number.MAX_SAFE_INTEGER, max_points: 5000,
      });
      this.window.backfill(history);
    } catch {
      // live-only is fine; history just starts empty
    }

    this.buildPicker();
    this.renderAll();
    const repaint = () => {
      if (this.dirty) {
        this.dirty = false;
        this.renderAll();
      }
      requestAnimationFrame(repaint);
    };
    requestAnimationFrame(repaint);
  }

  applyBreakpoint(): void {
    const cls = this.layout.setViewport(window.innerWidth);
    const grid = document.getElementById("grid")!;
    grid.className = `grid bp-${cls}`;
    grid.style.gridTemplateColumns = `repeat(${GRID_COLUMNS[cls]}, 1fr)`;
  }

  // ------------------------------------------------------------------
  // panel picker (the drop-down select menu)

  buildPicker(): void {
    const host = document.getElementById("picker")!;
    clear(host);
    const kindSelect = el("select");
    for (const kind of PANEL_KINDS) {
      const option = el("option", "", kind) as HTMLOptionElement;
      option.value = kind;
      kindSelect.appendChild(option);
    }
    const zoneSelect = el("select");
    zoneSelect.appendChild(el("option", "", "(any zone)"));
    for (const floor of this.building.floors) {
      for (const zone of floor.zones) {
        const option = el("option", "", zone.id) as HTMLOptionElement;
        option.value = zone.id;
        zoneSelect.appendChild(option);
      }
    }
    const metricSelect = el("select");
    for (const metric of ["temperature", "humidity", "duty", "level",
                          "door_state", ""]) {
      const option = el("option", "", metric || "(any metric)") as HTMLOptionElement;
      option.value = metric;
      metricSelect.appendChild(option);
    }
    const addButton = el("button", "", "add panel");
    const inlineError = el("span", "inline-error", "");
    addButton.onclick = () => {
      const kind = kindSelect.value as PanelKind;
      const zone = (zoneSelect as HTMLSelectElement).value || undefined;
      const metric = (metricSelect as HTMLSelectElement).value || undefined;
      const spec: PanelSpec = {
        id: `panel-${Date.now()}`,
        kind,
        title: `${kind}${zone ? " " + zone : ""}${metric ? " " + metric : ""}`,
        filter: { zone, metric,
                  recordClass: kind === "event_feed" ? "event"
                    : kind === "energy_bar" ? "energy" : "sensor" },
        refresh: "stream",
      };
      try {
        this.layout.addPanel(spec, this.building);
        inlineError.textContent = "";
        this.renderAll();
      } catch (error) {
        inlineError.textContent = error instanceof LayoutValidationError
          ? error.message : String(error);
      }
    };
    host.append("add: ", kindSelect, zoneSelect, metricSelect, addButton,
                inlineError);

    const awayButton = el("button", "", "toggle away mode");
    let away = false;
    awayButton.onclick = async () => {
      try {
        away = !away;
        await this.api.setAway(away);
        toast(`away mode ${away ? "on" : "off"}`);
      } catch (error) {
        away = !away;
        toast(`away toggle failed: ${String(error)}`);
      }
    };
    host.append(" ", awayButton);
  }

  // ------------------------------------------------------------------
  // rendering

  renderAll(): void {
    const grid = document.getElementById("grid")!;
    clear(grid);
    if (this.layout.panels.length === 0) {
      grid.appendChild(el("div", "empty-dashboard",
                          "dashboard is empty - add a panel above"));
      return;
    }
    for (const spec of this.layout.panels) {
      grid.appendChild(this.renderPanel(spec));
    }
  }

  private panelFrame(spec: PanelSpec): [HTMLElement, HTMLElement] {
    const frame = el("section", "panel");
    const header = el("header");
    header.appendChild(el("h3", "", spec.title));
    const controls = el("span", "panel-controls");
    const left = el("button", "", "<");
    left.onclick = () => { this.layout.movePanel(spec.id, -1); this.renderAll(); };
    const right = el("button", "", ">");
    right.onclick = () => { this.layout.movePanel(spec.id, +1); this.renderAll(); };
    const remove = el("button", "", "x");
    remove.onclick = () => { this.layout.removePanel(spec.id); this.renderAll(); };
    controls.append(left, right, remove);
    header.appendChild(controls);
    frame.appendChild(header);
    const body = el("div", "panel-body");
    frame.appendChild(body);
    return [frame, body];
  }

  renderPanel(spec: PanelSpec): HTMLElement {
    const [frame, body] = this.panelFrame(spec);
    switch (spec.kind) {
      case "line_chart": this.paintChart(spec, body); break;
      case "gauge": this.paintGauge(spec, body); break;
      case "status_grid": this.paintStatusGrid(spec, body); break;
      case "event_feed": this.paintEventFeed(spec, body); break;
      case "energy_bar": this.paintEnergyBar(spec, body); break;
      case "control_card": this.paintControlCard(spec, body); break;
    }
    return frame;
  }

  paintChart(spec: PanelSpec, body: HTMLElement): void {
    const view = renderLineChart(spec, this.window);
    if (view.geometry.empty) {
      body.appendChild(el("div", "empty", EMPTY_STATE_TEXT));
      return;
    }
    const svg = svgEl("svg");
    svg.setAttribute("viewBox", `0 0 ${view.geometry.width} ${view.geometry.height}`);
    svg.setAttribute("class", "chart");
    const palette = ["#2b8a3e", "#1971c2", "#e8590c", "#9c36b5", "#c92a2a"];
    view.geometry.polylines.forEach((line, i) => {
      const poly = svgEl("polyline");
      poly.setAttribute("points", line.path);
      poly.setAttribute("fill", "none");
      const desired = line.label === "desired";
      poly.setAttribute("stroke", desired ? "#333" : palette[i % palette.length]);
      poly.setAttribute("stroke-width", "1.5");
      if (desired) poly.setAttribute("stroke-dasharray", "6 3");
      svg.appendChild(poly);
    });
    body.appendChild(svg);
    body.appendChild(el("div", "legend", view.seriesLabels.join(" / ")));
  }

  paintGauge(spec: PanelSpec, body: HTMLElement): void {
    const view = renderGauge(spec, this.window);
    if (view.value === null) {
      body.appendChild(el("div", "empty", EMPTY_STATE_TEXT));
      return;
    }
    body.appendChild(el("div", "gauge-value",
                        `${view.value.toFixed(1)} ${view.unit}`));
    body.appendChild(el("div", "legend", view.label));
  }

  paintStatusGrid(spec: PanelSpec, body: HTMLElement): void {
    const view = renderStatusGrid(spec, this.window);
    if (view.cells.length === 0) {
      body.appendChild(el("div", "empty", EMPTY_STATE_TEXT));
      return;
    }
    const grid = el("div", "status-grid");
    for (const cell of view.cells) {
      const node = el("div", `status-cell status-${cell.state.split(" ")[0]}`);
      node.appendChild(el("div", "status-label", cell.label));
      node.appendChild(el("div", "status-state", cell.state));
      grid.appendChild(node);
    }
    body.appendChild(grid);
  }

  paintEventFeed(spec: PanelSpec, body: HTMLElement): void {
    const view = renderEventFeed(spec, this.window);
    if (view.entries.length === 0) {
      body.appendChild(el("div", "empty", EMPTY_STATE_TEXT));
      return;
    }
    const list = el("ul", "event-feed");
    for (const entry of view.entries) {
      list.appendChild(el("li", "",
                          `[t=${entry.timestamp.toFixed(0)}s] ${entry.text}`));
    }
    body.appendChild(list);
  }

  paintEnergyBar(spec: PanelSpec, body: HTMLElement): void {
    const view = renderEnergyBar(spec, this.window);
    if (view.currentW === null) {
      body.appendChild(el("div", "empty", EMPTY_STATE_TEXT));
      return;
    }
    body.appendChild(el("div", "gauge-value", `${view.currentW.toFixed(1)} W`));
    const bars = el("div", "energy-bars");
    for (const bar of view.bars) {
      const column = el("div", "energy-bar");
      const pct = view.peakW > 0 ? (bar.watts / view.peakW) * 100 : 0;
      column.style.height = `${Math.max(2, pct)}%`;
      column.title = `${bar.watts.toFixed(1)} W at t=${bar.timestamp}s`;
      bars.appendChild(column);
    }
    body.appendChild(bars);
  }

  paintControlCard(spec: PanelSpec, body: HTMLElement): void {
    const floor = spec.filter.floor ?? 1;
    let card = this.cards.get(spec.id);
    if (!card) {
      card = new ControlCard();
      this.cards.set(spec.id, card);
    }
    const active = this.window.latest({
      metric: "setpoint_temperature",
      device: `controller_f${floor}`,
    });
    if (active && typeof active.value === "number") {
      card.settle(active.value);
    }
    const shown = typeof card.state.shown === "number" ? card.state.shown : 22.0;
    const value = el("div", "gauge-value", `${shown.toFixed(1)} degC`);
    if (card.state.phase === "pending") value.className += " pending";
    body.appendChild(value);
    body.appendChild(el("div", "legend",
                        card.state.phase === "pending" ? "pending confirmation..."
                        : card.state.error ?? `floor ${floor} target`));
    const row = el("div", "card-row");
    for (const delta of [-0.5, +0.5]) {
      const btn = el("button", "", delta > 0 ? "+0.5" : "-0.5");
      btn.onclick = () => {
        const target = Math.round((shown + delta) * 2) / 2;
        void card!.act(
          target,
          () => this.api.setSetpoint({ floor }, target, 55.0),
          (r) => r.metric === "setpoint_temperature"
            && r.device_id === `controller_f${floor}`
            && typeof r.value === "number"
            && Math.abs(r.value - target) < 1e-9,
        ).then(() => {
          if (card!.state.error) toast(card!.state.error);
          this.dirty = true;
        });
        this.dirty = true;
      };
      row.appendChild(btn);
    }
    body.appendChild(row);

    const doors = this.building.floors
      .flatMap((f) => f.zones)
      .filter((z) => spec.filter.floor === undefined
        || this.building.floors.some((f) => f.index === spec.filter.floor
          && f.zones.includes(z)))
      .flatMap((z) => z.devices.filter((d) => d.type === "servo_door"));
    if (doors.length > 0) {
      const doorRow = el("div", "card-row");
      const door = doors[0];
      for (const position of ["open", "closed"] as const) {
        const btn = el("button", "", `${door.id}: ${position}`);
        btn.onclick = () => {
          this.api.setDoor(door.id, position)
            .then(() => toast(`${door.id} -> ${position}`))
            .catch((error) => toast(`door command failed: ${String(error)}`));
        };
        doorRow.appendChild(btn);
      }
      body.appendChild(doorRow);
    }
  }
}

declare global {
  interface Window { dashboard: Dashboard }
}

if (typeof document !== "undefined" && document.getElementById("grid")) {
  const dashboard = new Dashboard();
  window.dashboard = dashboard;
  dashboard.boot().catch((error) => {
    const banner = document.getElementById("stream-state");
    if (banner) {
      banner.textContent = `failed to reach the gateway: ${String(error)}`;
      banner.className = "banner";
    }
  });
}

export { Dashboard };
