// Dashboard bootstrap: hydrate from /state, subscribe to the telemetry
// stream, and mount the four panels. All rendering is driven by the store;
// a reload rebuilds the identical view from /state plus the stream.

import { ApiClient } from "./api";
import { createExperimentPanel } from "./panels/experiment";
import { createInjectionPanel } from "./panels/injection";
import { createJournalPanel } from "./panels/journal";
import { createMonitorPanel } from "./panels/monitor";
import { DashboardStore } from "./store";
import { TelemetryFeed } from "./telemetry";
import "./style.css";

async function boot(): Promise<void> {
  const api = new ApiClient(import.meta.env.VITE_FARMSIM_URL ?? "");
  const store = new DashboardStore();

  const app = document.querySelector<HTMLElement>("#app")!;
  const banner = document.createElement("div");
  banner.className = "banner";
  app.append(banner);

  const title = document.createElement("header");
  title.className = "masthead";
  app.append(title);

  const row = document.createElement("div");
  row.className = "panels";
  app.append(row);

  row.append(
    createExperimentPanel(store, api),
    createInjectionPanel(store, api),
    createMonitorPanel(store),
  );
  app.append(createJournalPanel(store, api));

  store.subscribe(() => {
    const scenario = store.scenario;
    const record = store.latest;
    title.textContent = scenario
      ? `${scenario.name} (seed ${scenario.seed}) — t=${record?.t.toFixed(1) ?? "?"}s` +
        (record && !record.running ? " [stopped]" : "")
      : "connecting…";
    if (store.connection === "stale") {
      banner.textContent = "telemetry stale: reconnecting…";
      banner.className = "banner stale";
    } else if (store.lastError) {
      banner.textContent = store.lastError;
      banner.className = "banner error";
    } else {
      banner.textContent = "";
      banner.className = "banner";
    }
  });

  const state = await api.state();
  store.hydrate(state);

  const feed = new TelemetryFeed(api.telemetryUrl(), {
    onRecord: (record) => store.applyTelemetry(record),
    onStatus: (status) => store.setConnection(status),
  });
  feed.connect();
}

void boot();
