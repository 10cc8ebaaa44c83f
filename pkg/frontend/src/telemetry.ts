// WebSocket telemetry feed with automatic reconnection.
//
// Each message is one JSON telemetry record (newline terminated). On
// disconnect the store is flagged stale (the UI shows a banner) and the
// feed retries with capped exponential backoff until the stream resumes.

import type { TelemetryRecord } from "./types";

export interface FeedCallbacks {
  onRecord(record: TelemetryRecord): void;
  onStatus(status: "connecting" | "live" | "stale"): void;
}

export function reconnectDelay(attempt: number, baseMs = 250, capMs = 5000): number {
  return Math.min(capMs, baseMs * 2 ** Math.min(attempt, 10));
}

export function parseTelemetryFrame(data: string): TelemetryRecord {
  return JSON.parse(data.trim()) as TelemetryRecord;
}

export class TelemetryFeed {
  private socket: WebSocket | null = null;
  private attempt = 0;
  private closed = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(private url: string, private callbacks: FeedCallbacks) {}

  connect(): void {
    this.callbacks.onStatus(this.attempt === 0 ? "connecting" : "stale");
    const socket = new WebSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempt = 0;
      this.callbacks.onStatus("live");
    };
    socket.onmessage = (event) => {
      this.callbacks.onRecord(parseTelemetryFrame(String(event.data)));
    };
    socket.onclose = () => this.scheduleReconnect();
    socket.onerror = () => socket.close();
  }

  private scheduleReconnect(): void {
    if (this.closed) return;
    this.callbacks.onStatus("stale");
    const delay = reconnectDelay(this.attempt);
    this.attempt += 1;
    this.timer = setTimeout(() => this.connect(), delay);
  }

  close(): void {
    this.closed = true;
    if (this.timer) clearTimeout(this.timer);
    this.socket?.close();
  }
}
