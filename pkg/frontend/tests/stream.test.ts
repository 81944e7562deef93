import { describe, expect, it } from "vitest";

import { StreamClient, StreamState, WebSocketLike } from "../src/stream.js";
import type { TelemetryRecord } from "../src/records.js";

class FakeSocket implements WebSocketLike {
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  onmessage: ((event: { data: string }) => void) | null = null;
  closedByClient = false;

  close(): void {
    this.closedByClient = true;
  }

  serverSends(frame: unknown): void {
    this.onmessage?.({ data: JSON.stringify(frame) });
  }
}

function record(id: number, value = 21.0): TelemetryRecord {
  return { id, timestamp: id, class: "sensor", device_id: "kitchen_th",
           zone_id: "kitchen", floor: 1, metric: "temperature", value };
}

function harness() {
  const sockets: FakeSocket[] = [];
  const timers: (() => void)[] = [];
  const client = new StreamClient(
    () => {
      const socket = new FakeSocket();
      sockets.push(socket);
      return socket;
    },
    { backoffMs: 100, maxBackoffMs: 1000, schedule: (fn) => timers.push(fn) },
  );
  const received: TelemetryRecord[] = [];
  const states: StreamState[] = [];
  client.onRecord((r) => received.push(r));
  client.onState((s) => states.push(s));
  return { client, sockets, timers, received, states };
}

describe("StreamClient", () => {
  it("delivers records and ignores hello/heartbeat frames", () => {
    const { client, sockets, received } = harness();
    client.start();
    sockets[0].onopen?.();
    sockets[0].serverSends({ kind: "hello", session: 1 });
    sockets[0].serverSends(record(1));
    sockets[0].serverSends({ kind: "heartbeat", time: 10 });
    sockets[0].serverSends(record(2));
    expect(received.map((r) => r.id)).toEqual([1, 2]);
  });

  it("suppresses duplicate ids across a reconnect", () => {
    const { client, sockets, timers, received } = harness();
    client.start();
    sockets[0].onopen?.();
    sockets[0].serverSends(record(1));
    sockets[0].serverSends(record(2));
    sockets[0].onclose?.();
    timers.shift()!();           // run the reconnect timer
    expect(sockets).toHaveLength(2);
    sockets[1].onopen?.();
    sockets[1].serverSends(record(2));   // replayed by the server
    sockets[1].serverSends(record(3));
    expect(received.map((r) => r.id)).toEqual([1, 2, 3]);
  });

  it("exposes a reconnecting state with exponential backoff", () => {
    const { client, sockets, timers, states } = harness();
    client.start();
    sockets[0].onopen?.();
    sockets[0].onclose?.();
    expect(states).toEqual(["connecting", "open", "reconnecting"]);
    expect(client.nextDelayMs()).toBe(100);
    timers.shift()!();
    sockets[1].onclose?.();      // fails again before opening
    expect(client.nextDelayMs()).toBe(200);
    timers.shift()!();
    sockets[2].onclose?.();
    expect(client.nextDelayMs()).toBe(400);
    timers.shift()!();
    sockets[3].onopen?.();       // success resets the backoff
    expect(client.state).toBe("open");
    expect(client.attempts).toBe(0);
  });

  it("stops cleanly without scheduling more reconnects", () => {
    const { client, sockets, timers } = harness();
    client.start();
    sockets[0].onopen?.();
    client.stop();
    sockets[0].onclose?.();
    expect(timers).toHaveLength(0);
    expect(client.state).toBe("closed");
    expect(sockets[0].closedByClient).toBe(true);
  });

  it("survives malformed frames", () => {
    const { client, sockets, received } = harness();
    client.start();
    sockets[0].onopen?.();
    sockets[0].onmessage?.({ data: "not json{{{" });
    sockets[0].serverSends("just a string");
    sockets[0].serverSends(record(5));
    expect(received.map((r) => r.id)).toEqual([5]);
  });
});
