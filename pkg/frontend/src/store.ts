// Dashboard state: the latest telemetry record plus windowed histories.
//
// Everything displayed originates from /state (hydration) or the telemetry
// stream; there is no client-side simulation and no optimistic mutation, so
// reloading the page reconstructs an identical view.

import type { JournalEntry, StateResponse, TelemetryRecord } from "./types";

export type ConnectionStatus = "connecting" | "live" | "stale";

export interface HistoryPoint {
  t: number;
  value: number;
}

const HISTORY_WINDOW = 600; // records kept for the efficiency/missing graphs

export class DashboardStore {
  latest: TelemetryRecord | null = null;
  scenario: StateResponse["scenario"] | null = null;
  efficiencyHistory: HistoryPoint[] = [];
  missingHistory: HistoryPoint[] = [];
  journal: JournalEntry[] = [];
  connection: ConnectionStatus = "connecting";
  lastError: string | null = null;

  private listeners = new Set<() => void>();

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  hydrate(state: StateResponse): void {
    this.scenario = state.scenario;
    this.journal = state.journal_tail;
    this.applyTelemetry(state.snapshot);
  }

  applyTelemetry(record: TelemetryRecord): void {
    // records arrive in virtual-time order; drop anything stale so a burst
    // always lands on the last record's state
    if (this.latest && record.t < this.latest.t) return;
    this.latest = record;
    this.pushHistory(this.efficiencyHistory, record.t, record.efficiency);
    this.pushHistory(this.missingHistory, record.t, record.missing_events);
    this.emit();
  }

  private pushHistory(history: HistoryPoint[], t: number, value: number): void {
    const last = history[history.length - 1];
    if (last && last.t === t) return; // hydration snapshot may repeat a tick
    history.push({ t, value });
    if (history.length > HISTORY_WINDOW) history.splice(0, history.length - HISTORY_WINDOW);
  }

  setJournal(entries: JournalEntry[]): void {
    this.journal = entries;
    this.emit();
  }

  setConnection(status: ConnectionStatus): void {
    if (this.connection !== status) {
      this.connection = status;
      this.emit();
    }
  }

  setError(message: string | null): void {
    this.lastError = message;
    this.emit();
  }
}
