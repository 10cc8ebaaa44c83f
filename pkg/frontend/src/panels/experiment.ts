// Experiment panel: rate/size sliders with an explicit set-parameters
// action, efficiency and missing-events displays with windowed graphs,
// authority toggles, and the stop/go run controls.
//
// Authority buttons render the acknowledged mask from telemetry, never an
// optimistic local flip.

import { ApiClient, ApiError, CONTROLS } from "../api";
import { sparklineSvg } from "../sparkline";
import type { DashboardStore } from "../store";
import type { Strategy } from "../types";

const STRATEGIES: Strategy[] = ["wr", "fp", "gp", "gf"];

export function createExperimentPanel(store: DashboardStore, api: ApiClient): HTMLElement {
  const root = document.createElement("section");
  root.className = "panel";
  root.innerHTML = `
    <h2>Experiment Information</h2>
    <div class="authority">
      <span>Authority</span>
      ${STRATEGIES.map(
        (s) => `<button class="toggle" data-strategy="${s}">${s.toUpperCase()}</button>`,
      ).join("")}
    </div>
    <label>Interaction rate <span data-field="rate-label"></span>
      <input type="range" data-field="rate" min="0" step="10">
    </label>
    <label>Interaction size <span data-field="size-label"></span>
      <input type="range" data-field="size" min="1000" step="1000">
    </label>
    <button data-action="set-params">Set Parameters</button>
    <div class="metric">
      <span>Efficiency <strong data-field="efficiency"></strong></span>
      <div data-field="efficiency-graph" class="graph"></div>
    </div>
    <div class="metric">
      <span>Missing events <strong data-field="missing"></strong></span>
      <div data-field="missing-graph" class="graph"></div>
    </div>
    <div class="runcontrol">
      <button data-action="stop">Stop</button>
      <button data-action="go">Go</button>
    </div>
  `;

  const rate = root.querySelector<HTMLInputElement>('[data-field="rate"]')!;
  const size = root.querySelector<HTMLInputElement>('[data-field="size"]')!;
  let rangesInitialized = false;

  const send = async (spec: { kind: string; args: Record<string, unknown> }) => {
    try {
      store.setError(null);
      await api.inject(spec);
    } catch (error) {
      store.setError(error instanceof ApiError ? error.message : String(error));
    }
  };

  root.querySelector('[data-action="set-params"]')!.addEventListener("click", () => {
    void send(CONTROLS["experiment.set-parameters"](Number(rate.value), Number(size.value)));
  });
  root.querySelector('[data-action="stop"]')!.addEventListener("click", () => {
    void send(CONTROLS["experiment.stop"]());
  });
  root.querySelector('[data-action="go"]')!.addEventListener("click", () => {
    void send(CONTROLS["experiment.go"]());
  });
  for (const button of root.querySelectorAll<HTMLButtonElement>("[data-strategy]")) {
    button.addEventListener("click", () => {
      const strategy = button.dataset.strategy as Strategy;
      const granted = store.latest?.authority[strategy] ?? false;
      void send(CONTROLS["experiment.authority-toggle"]({ [strategy]: !granted }));
    });
  }

  const render = () => {
    const record = store.latest;
    if (!record) return;
    if (!rangesInitialized) {
      // slider spans: rate up to twice the hydrated nominal, size up to 2x
      rate.max = String(Math.max(record.params.crossing_rate * 2, 100));
      rate.value = String(record.params.crossing_rate);
      size.max = String(record.params.mean_size_bytes * 2);
      size.value = String(record.params.mean_size_bytes);
      rangesInitialized = true;
    }
    root.querySelector('[data-field="rate-label"]')!.textContent =
      `${record.params.crossing_rate.toFixed(0)} /s`;
    root.querySelector('[data-field="size-label"]')!.textContent =
      `${(record.params.mean_size_bytes / 1000).toFixed(0)} kB`;
    root.querySelector('[data-field="efficiency"]')!.textContent =
      record.efficiency.toFixed(4);
    root.querySelector('[data-field="missing"]')!.textContent =
      String(record.missing_events);
    root.querySelector('[data-field="efficiency-graph"]')!.innerHTML = sparklineSvg(
      store.efficiencyHistory, 220, 48, 0, 1,
    );
    root.querySelector('[data-field="missing-graph"]')!.innerHTML = sparklineSvg(
      store.missingHistory, 220, 48, 0,
    );
    for (const button of root.querySelectorAll<HTMLButtonElement>("[data-strategy]")) {
      const strategy = button.dataset.strategy as Strategy;
      button.classList.toggle("granted", record.authority[strategy]);
    }
    root.querySelector<HTMLButtonElement>('[data-action="stop"]')!.disabled = !record.running;
    root.querySelector<HTMLButtonElement>('[data-action="go"]')!.disabled = record.running;
  };

  store.subscribe(render);
  render();
  return root;
}
