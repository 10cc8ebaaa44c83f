// Wire types for the control service. These mirror the JSON emitted by the
// service exactly; the dashboard never derives state any other way.

export type Strategy = "wr" | "fp" | "gp" | "gf";

export type AuthorityMask = Record<Strategy, boolean>;

export interface FarmletView {
  id: string;
  role: "active" | "hot_spare" | "unfit";
  occupancy: number;
  capacity: number;
  drop_rate: number;
  routed: number;
  arrived: number;
  processed: number;
  dropped_prescale: number;
  lost: number;
  overflowed: number;
  links: { data: "up" | "severed"; control: "up" | "severed" };
}

export interface WorkerView {
  id: number;
  farmlet: string;
  status: "idle" | "processing" | "hung" | "restarting";
  behavior: "run_well" | "run_poor";
  quarantined: boolean;
  p: number;
  v: number;
  i: number;
}

export interface Counters {
  generated: number;
  processed: number;
  accepted_l1: number;
  rejected_l1: number;
  dropped_prescale: number;
  lost: number;
  overflowed: number;
  l2_passed: number;
  l3_passed: number;
  generated_bytes: number;
  l3_bytes: number;
}

export interface TelemetryRecord {
  t: number;
  running: boolean;
  efficiency: number;
  missing_events: number;
  authority: AuthorityMask;
  params: {
    crossing_rate: number;
    mean_interactions: number;
    mean_size_bytes: number;
    error_rate: number;
    heavy_flavor_fraction: number;
  };
  behavior: "run_well" | "run_poor";
  counters: Counters;
  in_flight: { links: number; queued: number; processing: number; total: number };
  farmlets: FarmletView[];
  workers: WorkerView[];
}

export interface JournalEntry {
  t: number;
  wall: string;
  actor: string;
  command: { kind: string; t: number | null; args: Record<string, unknown> };
  previous: unknown;
  new: unknown;
}

export interface StateResponse {
  scenario: {
    name: string;
    seed: number;
    duration: number;
    telemetry_period: number;
  };
  snapshot: TelemetryRecord;
  journal_tail: JournalEntry[];
}

export interface CommandAck {
  accepted: boolean;
  deferred?: boolean;
  applied_at?: number;
  journal_index?: number;
  errors?: string[];
}
