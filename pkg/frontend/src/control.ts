// Control-card action state: optimistic pending until the gateway's record
// stream confirms the change, full revert on rejection or network failure.
// The client never treats its own state as authoritative.

import { ApiError } from "./api.js";
import type { TelemetryRecord } from "./records.js";

export type CardPhase = "idle" | "pending" | "confirmed" | "rejected";

export interface CardState {
  phase: CardPhase;
  /** value shown on the card (optimistic while pending) */
  shown: number | string | null;
  /** value before the action, restored on revert */
  previous: number | string | null;
  error: string | null;
}

export class ControlCard {
  state: CardState = { phase: "idle", shown: null, previous: null, error: null };
  private confirmsWhen: ((r: TelemetryRecord) => boolean) | null = null;
  private listeners: ((s: CardState) => void)[] = [];

  onChange(listener: (s: CardState) => void): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<CardState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  /** Reflect a settled value coming from telemetry (no action running). */
  settle(value: number | string): void {
    if (this.state.phase === "pending") return;
    this.update({ phase: this.state.phase === "rejected" ? "rejected" : "idle",
                  shown: value });
  }

  /**
   * Run one action: POST through `send`, show `optimistic` immediately,
   * then wait for a stream record satisfying `confirms`. A gateway
   * rejection or network failure restores the previous value.
   */
  async act(optimistic: number | string, send: () => Promise<unknown>,
            confirms: (r: TelemetryRecord) => boolean): Promise<void> {
    this.update({
      phase: "pending",
      previous: this.state.shown,
      shown: optimistic,
      error: null,
    });
    this.confirmsWhen = confirms;
    try {
      await send();
    } catch (error) {
      this.confirmsWhen = null;
      const reason = error instanceof ApiError
        ? `rejected: ${error.message}`
        : `network failure: ${String(error)}`;
      this.update({ phase: "rejected", shown: this.state.previous,
                    error: reason });
    }
  }

  /** Feed stream records; returns true when this record confirmed the
   * pending action. Optimistic state never survives without one. */
  observe(record: TelemetryRecord): boolean {
    if (this.state.phase !== "pending" || this.confirmsWhen === null) {
      return false;
    }
    if (!this.confirmsWhen(record)) return false;
    this.confirmsWhen = null;
    this.update({ phase: "confirmed", error: null });
    return true;
  }
}
