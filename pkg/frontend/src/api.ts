// HTTP client for the control service, plus the control-to-command table.
//
// Every interactive control on the dashboard maps to exactly one documented
// API command; CONTROLS is that mapping, and the contract test enumerates
// it against the documented command vocabulary.

import type { AuthorityMask, CommandAck, JournalEntry, StateResponse } from "./types";

export interface CommandSpec {
  kind: string;
  args: Record<string, unknown>;
}

export const CONTROLS = {
  "experiment.set-parameters": (rate: number, size: number): CommandSpec => ({
    kind: "set_params",
    args: { crossing_rate: rate, mean_size_bytes: size },
  }),
  "experiment.stop": (): CommandSpec => ({ kind: "stop", args: {} }),
  "experiment.go": (): CommandSpec => ({ kind: "go", args: {} }),
  "experiment.authority-toggle": (mask: Partial<AuthorityMask>): CommandSpec => ({
    kind: "set_authority",
    args: { mask },
  }),
  "injection.hang": (worker: number): CommandSpec => ({
    kind: "hang_pa",
    args: { worker },
  }),
  "injection.restart": (worker: number): CommandSpec => ({
    kind: "restart_pa",
    args: { worker },
  }),
  "injection.sever": (farmlet: string, link: "data" | "control"): CommandSpec => ({
    kind: "sever",
    args: { target: farmlet, link },
  }),
  "injection.restore": (farmlet: string, link: "data" | "control"): CommandSpec => ({
    kind: "restore",
    args: { target: farmlet, link },
  }),
  "injection.error-rate": (p: number): CommandSpec => ({
    kind: "set_error_rate",
    args: { p },
  }),
  "injection.behavior": (behavior: "run_well" | "run_poor"): CommandSpec => ({
    kind: "set_behavior",
    args: { behavior },
  }),
} as const;

export type ControlId = keyof typeof CONTROLS;

export class ApiError extends Error {
  constructor(public details: string[]) {
    super(details.join("; "));
  }
}

export class ApiClient {
  constructor(private base: string = "") {}

  async state(): Promise<StateResponse> {
    const response = await fetch(`${this.base}/state`);
    if (!response.ok) throw new ApiError([`GET /state failed: ${response.status}`]);
    return (await response.json()) as StateResponse;
  }

  async journal(from?: number, to?: number): Promise<JournalEntry[]> {
    const params = new URLSearchParams();
    if (from !== undefined) params.set("from", String(from));
    if (to !== undefined) params.set("to", String(to));
    const suffix = params.size ? `?${params}` : "";
    const response = await fetch(`${this.base}/journal${suffix}`);
    if (!response.ok) throw new ApiError([`GET /journal failed: ${response.status}`]);
    return (await response.json()) as JournalEntry[];
  }

  async inject(command: CommandSpec): Promise<CommandAck> {
    // stop/go ride their dedicated run-control endpoints
    const url =
      command.kind === "stop" || command.kind === "go"
        ? `${this.base}/run/${command.kind}`
        : `${this.base}/inject`;
    const response = await fetch(url, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body:
        command.kind === "stop" || command.kind === "go"
          ? undefined
          : JSON.stringify({ kind: command.kind, args: command.args }),
    });
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError((body.detail as string[]) ?? [`POST failed: ${response.status}`]);
    }
    return body as CommandAck;
  }

  telemetryUrl(): string {
    const base = this.base || window.location.origin;
    return base.replace(/^http/, "ws") + "/telemetry";
  }
}
