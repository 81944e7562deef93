import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import { ControlCard } from "../src/control.js";
import type { TelemetryRecord } from "../src/records.js";

function setpointRecord(value: number, id = 1): TelemetryRecord {
  return { id, timestamp: 100, class: "event",
           device_id: "controller_f1", zone_id: "", floor: 0,
           metric: "setpoint_temperature", value };
}

const confirms23 = (r: TelemetryRecord) =>
  r.metric === "setpoint_temperature" && r.value === 23.0;

describe("ControlCard", () => {
  it("shows optimistic state then confirms on the matching record", async () => {
    const card = new ControlCard();
    card.settle(22.0);
    await card.act(23.0, async () => ({ status: "accepted" }), confirms23);
    expect(card.state.phase).toBe("pending");
    expect(card.state.shown).toBe(23.0);

    expect(card.observe(setpointRecord(21.0))).toBe(false);  // not ours
    expect(card.state.phase).toBe("pending");
    expect(card.observe(setpointRecord(23.0, 2))).toBe(true);
    expect(card.state.phase).toBe("confirmed");
    expect(card.state.shown).toBe(23.0);
  });

  it("reverts with the gateway's reason on a 409 rejection", async () => {
    const card = new ControlCard();
    card.settle(22.0);
    await card.act(99.0, async () => {
      throw new ApiError(409, "temperature setpoint 99.0 outside comfort bounds");
    }, () => true);
    expect(card.state.phase).toBe("rejected");
    expect(card.state.shown).toBe(22.0);   // optimistic value rolled back
    expect(card.state.error).toContain("comfort bounds");
    // a later record cannot resurrect the rejected action
    expect(card.observe(setpointRecord(99.0))).toBe(false);
  });

  it("reverts on network failure", async () => {
    const card = new ControlCard();
    card.settle(22.0);
    await card.act(23.0, async () => {
      throw new TypeError("fetch failed");
    }, confirms23);
    expect(card.state.phase).toBe("rejected");
    expect(card.state.shown).toBe(22.0);
    expect(card.state.error).toContain("network failure");
  });

  it("settle does not stomp a pending action", async () => {
    const card = new ControlCard();
    card.settle(22.0);
    await card.act(23.0, async () => ({}), confirms23);
    card.settle(22.1);   // stale telemetry arriving mid-flight
    expect(card.state.shown).toBe(23.0);
    expect(card.state.phase).toBe("pending");
  });

  it("notifies listeners on every transition", async () => {
    const card = new ControlCard();
    const phases: string[] = [];
    card.onChange((s) => phases.push(s.phase));
    card.settle(22.0);
    await card.act(23.0, async () => ({}), confirms23);
    card.observe(setpointRecord(23.0));
    expect(phases).toEqual(["idle", "pending", "confirmed"]);
  });
});
