// Journal viewer: the control-change log, so any parameter or authority
// change can be reviewed against the behavior seen at that time, not just
// the current values.

import type { ApiClient } from "../api";
import type { DashboardStore } from "../store";
import type { JournalEntry } from "../types";

export function journalRows(entries: JournalEntry[]): string {
  return entries
    .slice()
    .reverse()
    .map(
      (entry) => `
      <tr>
        <td>${entry.t.toFixed(3)}</td>
        <td>${entry.actor}</td>
        <td>${entry.command.kind}</td>
        <td><code>${JSON.stringify(entry.command.args)}</code></td>
        <td><code>${JSON.stringify(entry.previous)}</code> &rarr;
            <code>${JSON.stringify(entry.new)}</code></td>
      </tr>`,
    )
    .join("");
}

export function createJournalPanel(store: DashboardStore, api: ApiClient): HTMLElement {
  const root = document.createElement("section");
  root.className = "panel";
  root.innerHTML = `
    <h2>Control Journal</h2>
    <button data-action="refresh">Refresh</button>
    <table>
      <thead><tr><th>t</th><th>actor</th><th>command</th><th>args</th><th>change</th></tr></thead>
      <tbody data-field="rows"></tbody>
    </table>
  `;
  root.querySelector('[data-action="refresh"]')!.addEventListener("click", () => {
    void api.journal().then((entries) => store.setJournal(entries));
  });
  const body = root.querySelector<HTMLElement>('[data-field="rows"]')!;
  const render = () => {
    body.innerHTML = journalRows(store.journal);
  };
  store.subscribe(render);
  render();
  return root;
}
