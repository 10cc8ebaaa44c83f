// Fault-injection panel: per-worker hang/restart, per-farmlet data and
// control link sever/restore, the corrupt-data error-rate slider, and the
// run-well / run-poor behavior pair.

import { ApiClient, ApiError, CONTROLS } from "../api";
import type { DashboardStore } from "../store";

export function createInjectionPanel(store: DashboardStore, api: ApiClient): HTMLElement {
  const root = document.createElement("section");
  root.className = "panel";
  root.innerHTML = `
    <h2>Fault Injection</h2>
    <div data-field="workers" class="worker-grid"></div>
    <div data-field="links"></div>
    <label>Error rate <span data-field="error-label"></span>
      <input type="range" data-field="error" min="0" max="1" step="0.01">
    </label>
    <div class="behavior">
      <button data-behavior="run_well">Run Well</button>
      <button data-behavior="run_poor">Run Poor</button>
    </div>
    <div data-field="inline-error" class="inline-error" hidden></div>
  `;

  const send = async (spec: { kind: string; args: Record<string, unknown> }) => {
    const errorBox = root.querySelector<HTMLElement>('[data-field="inline-error"]')!;
    try {
      errorBox.hidden = true;
      store.setError(null);
      await api.inject(spec);
    } catch (error) {
      const message = error instanceof ApiError ? error.message : String(error);
      errorBox.textContent = message;
      errorBox.hidden = false;
      store.setError(message);
    }
  };

  const errorSlider = root.querySelector<HTMLInputElement>('[data-field="error"]')!;
  errorSlider.addEventListener("change", () => {
    void send(CONTROLS["injection.error-rate"](Number(errorSlider.value)));
  });
  for (const button of root.querySelectorAll<HTMLButtonElement>("[data-behavior]")) {
    button.addEventListener("click", () => {
      void send(
        CONTROLS["injection.behavior"](button.dataset.behavior as "run_well" | "run_poor"),
      );
    });
  }

  const workers = root.querySelector<HTMLElement>('[data-field="workers"]')!;
  workers.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const worker = Number(target.dataset.worker);
    if (Number.isNaN(worker)) return;
    if (target.dataset.action === "hang") void send(CONTROLS["injection.hang"](worker));
    if (target.dataset.action === "restart") void send(CONTROLS["injection.restart"](worker));
  });

  const links = root.querySelector<HTMLElement>('[data-field="links"]')!;
  links.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const farmlet = target.dataset.farmlet;
    const link = target.dataset.link as "data" | "control" | undefined;
    if (!farmlet || !link) return;
    const control =
      target.dataset.action === "sever"
        ? CONTROLS["injection.sever"](farmlet, link)
        : CONTROLS["injection.restore"](farmlet, link);
    void send(control);
  });

  let built = false;
  const render = () => {
    const record = store.latest;
    if (!record) return;
    if (!built) {
      workers.innerHTML = record.workers
        .map(
          (w) => `
          <div class="worker-controls" data-worker-row="${w.id}">
            <span>w${w.id}</span>
            <button data-action="hang" data-worker="${w.id}">Hang</button>
            <button data-action="restart" data-worker="${w.id}">Restart</button>
          </div>`,
        )
        .join("");
      links.innerHTML = record.farmlets
        .map(
          (f) => `
          <div class="link-controls" data-link-row="${f.id}">
            <span>${f.id}</span>
            <button data-action="sever" data-farmlet="${f.id}" data-link="data">Sever data</button>
            <button data-action="restore" data-farmlet="${f.id}" data-link="data">Restore data</button>
            <button data-action="sever" data-farmlet="${f.id}" data-link="control">Sever control</button>
            <button data-action="restore" data-farmlet="${f.id}" data-link="control">Restore control</button>
          </div>`,
        )
        .join("");
      errorSlider.value = String(record.params.error_rate);
      built = true;
    }
    root.querySelector('[data-field="error-label"]')!.textContent =
      record.params.error_rate.toFixed(2);
    for (const button of root.querySelectorAll<HTMLButtonElement>("[data-behavior]")) {
      button.classList.toggle("granted", record.behavior === button.dataset.behavior);
    }
  };

  store.subscribe(render);
  render();
  return root;
}
