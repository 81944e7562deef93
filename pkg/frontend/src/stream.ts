// Live record stream: one WebSocket shared by all panels, automatic
// reconnect with exponential backoff, duplicate suppression by record id
// so reconnects never produce double chart points.

import type { TelemetryRecord } from "./records.js";

export type StreamState = "connecting" | "open" | "reconnecting" | "closed";

export interface WebSocketLike {
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  close(): void;
}

export interface StreamOptions {
  /** initial reconnect delay; doubles per attempt up to maxBackoffMs */
  backoffMs?: number;
  maxBackoffMs?: number;
  /** capacity of the seen-id ring used for deduplication */
  dedupeCapacity?: number;
  /** injectable timer, for tests */
  schedule?: (fn: () => void, ms: number) => unknown;
}

export class StreamClient {
  state: StreamState = "closed";
  attempts = 0;
  private ws: WebSocketLike | null = null;
  private recordHandlers: ((r: TelemetryRecord) => void)[] = [];
  private stateHandlers: ((s: StreamState) => void)[] = [];
  private seen = new Set<number>();
  private seenQueue: number[] = [];
  private stopped = false;
  private readonly backoffMs: number;
  private readonly maxBackoffMs: number;
  private readonly dedupeCapacity: number;
  private readonly schedule: (fn: () => void, ms: number) => unknown;

  constructor(
    private readonly connect: () => WebSocketLike,
    options: StreamOptions = {},
  ) {
    this.backoffMs = options.backoffMs ?? 500;
    this.maxBackoffMs = options.maxBackoffMs ?? 10_000;
    this.dedupeCapacity = options.dedupeCapacity ?? 20_000;
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
  }

  onRecord(handler: (r: TelemetryRecord) => void): void {
    this.recordHandlers.push(handler);
  }

  onState(handler: (s: StreamState) => void): void {
    this.stateHandlers.push(handler);
  }

  private setState(state: StreamState): void {
    this.state = state;
    for (const handler of this.stateHandlers) handler(state);
  }

  start(): void {
    this.stopped = false;
    this.open();
  }

  stop(): void {
    this.stopped = true;
    this.setState("closed");
    if (this.ws) this.ws.close();
    this.ws = null;
  }

  nextDelayMs(): number {
    return Math.min(this.backoffMs * 2 ** Math.max(0, this.attempts - 1),
                    this.maxBackoffMs);
  }

  private open(): void {
    this.setState(this.attempts === 0 ? "connecting" : "reconnecting");
    const ws = this.connect();
    this.ws = ws;
    ws.onopen = () => {
      this.attempts = 0;
      this.setState("open");
    };
    ws.onclose = () => {
      if (this.stopped) return;
      this.attempts += 1;
      this.setState("reconnecting");
      this.schedule(() => {
        if (!this.stopped) this.open();
      }, this.nextDelayMs());
    };
    ws.onmessage = (event) => {
      let frame: unknown;
      try {
        frame = JSON.parse(event.data);
      } catch {
        return;
      }
      if (!frame || typeof frame !== "object") return;
      if ("kind" in (frame as object)) return; // hello / heartbeat frames
      this.dispatch(frame as TelemetryRecord);
    };
  }

  private dispatch(record: TelemetryRecord): void {
    if (typeof record.id !== "number") return;
    if (this.seen.has(record.id)) return;
    this.seen.add(record.id);
    this.seenQueue.push(record.id);
    if (this.seenQueue.length > this.dedupeCapacity) {
      const evicted = this.seenQueue.shift();
      if (evicted !== undefined) this.seen.delete(evicted);
    }
    for (const handler of this.recordHandlers) handler(record);
  }
}
