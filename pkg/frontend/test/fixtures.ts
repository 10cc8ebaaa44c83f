import type { StateResponse, TelemetryRecord } from "../src/types";

export function record(overrides: Partial<TelemetryRecord> = {}): TelemetryRecord {
  return {
    t: 1.0,
    running: true,
    efficiency: 0.999,
    missing_events: 0,
    authority: { wr: false, fp: false, gp: false, gf: false },
    params: {
      crossing_rate: 1000,
      mean_interactions: 6,
      mean_size_bytes: 200000,
      error_rate: 0,
      heavy_flavor_fraction: 0.1,
    },
    behavior: "run_well",
    counters: {
      generated: 1000,
      processed: 990,
      accepted_l1: 30,
      rejected_l1: 960,
      dropped_prescale: 0,
      lost: 0,
      overflowed: 0,
      l2_passed: 3,
      l3_passed: 1,
      generated_bytes: 2_0000_0000,
      l3_bytes: 200000,
    },
    in_flight: { links: 2, queued: 5, processing: 3, total: 10 },
    farmlets: [
      {
        id: "f0",
        role: "active",
        occupancy: 3,
        capacity: 64,
        drop_rate: 0,
        routed: 500,
        arrived: 498,
        processed: 495,
        dropped_prescale: 0,
        lost: 0,
        overflowed: 0,
        links: { data: "up", control: "up" },
      },
      {
        id: "f2",
        role: "hot_spare",
        occupancy: 0,
        capacity: 64,
        drop_rate: 0,
        routed: 0,
        arrived: 0,
        processed: 0,
        dropped_prescale: 0,
        lost: 0,
        overflowed: 0,
        links: { data: "up", control: "up" },
      },
    ],
    workers: [
      {
        id: 0,
        farmlet: "f0",
        status: "processing",
        behavior: "run_well",
        quarantined: false,
        p: 0.8,
        v: 0.02,
        i: 0.18,
      },
      {
        id: 1,
        farmlet: "f0",
        status: "hung",
        behavior: "run_poor",
        quarantined: false,
        p: 0.9,
        v: 0.01,
        i: 0.09,
      },
    ],
    ...overrides,
  };
}

export function stateResponse(snapshot?: TelemetryRecord): StateResponse {
  return {
    scenario: { name: "live", seed: 1, duration: 60, telemetry_period: 0.1 },
    snapshot: snapshot ?? record(),
    journal_tail: [],
  };
}
