// Typed client for the gateway's /api/v1 endpoints. The fetch function is
// injectable so tests can fake the network.

import type { TelemetryRecord } from "./records.js";

export interface DeviceSummary {
  id: string;
  type: string;
}

export interface ZoneSummary {
  id: string;
  kind: string;
  climate_controlled: boolean;
  neighbors: string[];
  devices: DeviceSummary[];
}

export interface BuildingSummary {
  name: string;
  floors: { index: number; zones: ZoneSummary[] }[];
}

export interface EnergyReport {
  start: number;
  end: number;
  samples: number;
  total_wh: number;
  series: { timestamp: number; total_w: number }[];
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class GatewayApi {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    const body = await response.json().catch(() => ({}));
    if (!response.ok) {
      const detail = typeof body === "object" && body && "detail" in body
        ? String((body as { detail: unknown }).detail)
        : `HTTP ${response.status}`;
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  building(): Promise<BuildingSummary> {
    return this.request<BuildingSummary>("/api/v1/building");
  }

  async telemetry(params: {
    start: number;
    end: number;
    floor?: number;
    zone?: string;
    device?: string;
    metric?: string;
    class?: string;
    max_points?: number;
  }): Promise<TelemetryRecord[]> {
    const query = new URLSearchParams();
    for (const [key, value] of Object.entries(params)) {
      if (value !== undefined) query.set(key, String(value));
    }
    const body = await this.request<{ records: TelemetryRecord[] }>(
      `/api/v1/telemetry?${query.toString()}`,
    );
    return body.records;
  }

  energy(start: number, end: number): Promise<EnergyReport> {
    return this.request<EnergyReport>(`/api/v1/energy?start=${start}&end=${end}`);
  }

  setSetpoint(target: { zone?: string; floor?: number }, tRef: number,
              hRef: number, expiresInS?: number): Promise<unknown> {
    return this.request("/api/v1/setpoint", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ ...target, t_ref: tRef, h_ref: hRef,
                             expires_in_s: expiresInS }),
    });
  }

  setLight(device: string, level: number): Promise<unknown> {
    return this.request("/api/v1/light", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ device, level }),
    });
  }

  setDoor(device: string, position: "open" | "closed"): Promise<unknown> {
    return this.request("/api/v1/door", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ device, position }),
    });
  }

  setAway(on: boolean): Promise<unknown> {
    return this.request("/api/v1/away", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ on }),
    });
  }

  streamUrl(filters: Record<string, string | number | undefined>): string {
    const query = new URLSearchParams();
    for (const [key, value] of Object.entries(filters)) {
      if (value !== undefined) query.set(key, String(value));
    }
    const base = this.baseUrl || (typeof location !== "undefined" ? location.origin : "");
    const ws = base.replace(/^http/, "ws");
    const qs = query.toString();
    return `${ws}/api/v1/stream${qs ? "?" + qs : ""}`;
  }
}
