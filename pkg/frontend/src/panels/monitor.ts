// System monitor: per-farmlet role badges and queue gauges, and per-worker
// P/V/I utilization bars with status coloring. Pure projection of the last
// telemetry record.

import type { DashboardStore } from "../store";
import type { TelemetryRecord } from "../types";

export function monitorHtml(record: TelemetryRecord): string {
  return record.farmlets
    .map((farmlet) => {
      const fill = farmlet.capacity ? farmlet.occupancy / farmlet.capacity : 0;
      const workers = record.workers
        .filter((w) => w.farmlet === farmlet.id)
        .map(
          (w) => `
          <div class="worker-row status-${w.status}${w.quarantined ? " quarantined" : ""}"
               data-worker-bar="${w.id}">
            <span class="wid">w${w.id}</span>
            <span class="pvi">
              <span class="p" style="width:${(w.p * 100).toFixed(1)}%"></span>
              <span class="v" style="width:${(w.v * 100).toFixed(1)}%"></span>
              <span class="i" style="width:${(w.i * 100).toFixed(1)}%"></span>
            </span>
            <span class="status">${w.quarantined ? "quarantined" : w.status}</span>
          </div>`,
        )
        .join("");
      return `
      <div class="farmlet" data-farmlet="${farmlet.id}">
        <header>
          <strong>${farmlet.id}</strong>
          <span class="badge role-${farmlet.role}">${farmlet.role.replace("_", " ")}</span>
          <span class="links">data ${farmlet.links.data}, control ${farmlet.links.control}</span>
        </header>
        <div class="queue-gauge" title="queue ${farmlet.occupancy}/${farmlet.capacity}">
          <span style="width:${(fill * 100).toFixed(1)}%"></span>
          <em>${farmlet.occupancy}/${farmlet.capacity} queued, drop ${farmlet.drop_rate.toFixed(2)}</em>
        </div>
        ${workers}
      </div>`;
    })
    .join("");
}

export function createMonitorPanel(store: DashboardStore): HTMLElement {
  const root = document.createElement("section");
  root.className = "panel";
  root.innerHTML = `<h2>System Monitor</h2><div data-field="farm"></div>`;
  const farm = root.querySelector<HTMLElement>('[data-field="farm"]')!;
  const render = () => {
    if (store.latest) farm.innerHTML = monitorHtml(store.latest);
  };
  store.subscribe(render);
  render();
  return root;
}
