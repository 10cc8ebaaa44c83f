import { describe, expect, it } from "vitest";

import { DashboardStore } from "../src/store";
import { record, stateResponse } from "./fixtures";

describe("DashboardStore", () => {
  it("applies records in order and keeps windowed histories", () => {
    const store = new DashboardStore();
    for (let k = 1; k <= 5; k += 1) {
      store.applyTelemetry(record({ t: k, efficiency: 1 - k * 0.01 }));
    }
    expect(store.latest?.t).toBe(5);
    expect(store.efficiencyHistory.map((p) => p.t)).toEqual([1, 2, 3, 4, 5]);
    expect(store.missingHistory).toHaveLength(5);
  });

  it("a burst of records lands on the last record's state", () => {
    const store = new DashboardStore();
    for (let k = 1; k <= 100; k += 1) {
      store.applyTelemetry(record({ t: k, missing_events: k }));
    }
    expect(store.latest?.missing_events).toBe(100);
  });

  it("drops stale out-of-order records", () => {
    const store = new DashboardStore();
    store.applyTelemetry(record({ t: 2.0, missing_events: 7 }));
    store.applyTelemetry(record({ t: 1.0, missing_events: 99 }));
    expect(store.latest?.missing_events).toBe(7);
  });

  it("bounds history length to the window", () => {
    const store = new DashboardStore();
    for (let k = 1; k <= 700; k += 1) store.applyTelemetry(record({ t: k }));
    expect(store.efficiencyHistory.length).toBe(600);
    expect(store.efficiencyHistory[0]?.t).toBe(101);
  });

  it("reload reconstructs the same view from /state (statelessness)", () => {
    const snapshot = record({ t: 3.0, efficiency: 0.97 });
    const first = new DashboardStore();
    first.hydrate(stateResponse(snapshot));
    const second = new DashboardStore();
    second.hydrate(stateResponse(snapshot));
    expect(second.latest).toEqual(first.latest);
    expect(second.efficiencyHistory).toEqual(first.efficiencyHistory);
    expect(second.journal).toEqual(first.journal);
  });

  it("hydration then the same streamed tick does not duplicate history", () => {
    const store = new DashboardStore();
    const snapshot = record({ t: 3.0 });
    store.hydrate(stateResponse(snapshot));
    store.applyTelemetry(record({ t: 3.0 }));
    expect(store.efficiencyHistory.map((p) => p.t)).toEqual([3.0]);
  });

  it("notifies subscribers on every applied record and status change", () => {
    const store = new DashboardStore();
    let calls = 0;
    store.subscribe(() => (calls += 1));
    store.applyTelemetry(record({ t: 1 }));
    store.setConnection("live");
    store.setConnection("live"); // unchanged: no extra emit
    expect(calls).toBe(2);
  });
});
