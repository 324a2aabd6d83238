/** Presence matrix across precisions: who persists, who was an impostor. */

import type { PersistenceReportJson } from "./types.js";

export interface MatrixRow {
  text: string;
  cells: boolean[];
  status: "stable" | "transient" | "new-at-max";
  stableFrom: number | null;
}

export interface Matrix {
  precisions: number[];
  rows: MatrixRow[];
}

export function matrixFrom(report: PersistenceReportJson): Matrix {
  const { precisions, entries } = report.persistence;
  const rows: MatrixRow[] = entries.map((entry) => {
    let status = entry.status;
    if (!status) {
      if (entry.stable_from !== null) status = "stable";
      else if (entry.presence[entry.presence.length - 1]) status = "new-at-max";
      else status = "transient";
    }
    return {
      text: entry.text,
      cells: entry.presence,
      status,
      stableFrom: entry.stable_from,
    };
  });
  rows.sort((a, b) => (a.status === b.status ? a.text.localeCompare(b.text)
    : a.status === "stable" ? -1 : b.status === "stable" ? 1
      : a.status.localeCompare(b.status)));
  return { precisions, rows };
}

export function renderMatrix(container: HTMLElement,
                             report: PersistenceReportJson | null,
                             onRerun?: (precision: number) => void): void {
  container.replaceChildren();
  if (report === null || report.persistence.precisions.length < 2) {
    const prompt = document.createElement("p");
    prompt.className = "persistence-prompt";
    prompt.textContent =
      "Run the hunt at a second precision to compare transience versus persistence.";
    container.appendChild(prompt);
    return;
  }
  const matrix = matrixFrom(report);
  const table = document.createElement("table");
  table.className = "persistence-matrix";

  const cell = (tr: HTMLTableRowElement, text: string, cls = "") => {
    const td = document.createElement("td");
    td.textContent = text;
    if (cls) td.className = cls;
    tr.appendChild(td);
    return td;
  };

  const thead = document.createElement("thead");
  const head = document.createElement("tr");
  cell(head, "candidate");
  for (const p of matrix.precisions) {
    cell(head, `${p}d`);
  }
  cell(head, "verdict");
  thead.appendChild(head);
  table.appendChild(thead);

  const body = document.createElement("tbody");
  for (const row of matrix.rows) {
    const tr = document.createElement("tr");
    tr.className = `persist-${row.status}`;
    cell(tr, row.text);
    for (const present of row.cells) {
      cell(tr, present ? "x" : "·", present ? "present" : "absent");
    }
    cell(tr, row.status === "stable" ? `stable from ${row.stableFrom}` : row.status);
    body.appendChild(tr);
  }
  table.appendChild(body);
  container.appendChild(table);
  if (onRerun) {
    const button = document.createElement("button");
    const next = Math.max(...matrix.precisions) + 4;
    button.textContent = `re-run at ${next} digits`;
    button.className = "rerun";
    button.addEventListener("click", () => onRerun(next));
    container.appendChild(button);
  }
}
