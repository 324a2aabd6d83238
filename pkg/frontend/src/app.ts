/** Hunt console wiring: one in-flight hunt per tab, streaming results,
 * locally responsive threshold sliders reconciled against server re-filters,
 * and a persistence panel that escalates precision on demand. */

import {
  fetchJobReport,
  postHunt,
  postPersistence,
  refilterSession,
  streamJob,
  type HuntPayload,
  type SseHandle,
} from "./api.js";
import { acceptedTexts, applyThresholds } from "./filtering.js";
import { renderMatrix } from "./persistence.js";
import { renderRuler } from "./ruler.js";
import { renderScatter } from "./scatter.js";
import type { HuntReportJson, PersistenceReportJson, ServerCandidate, Thresholds } from "./types.js";

const API_BASE = "";

interface AppState {
  report: HuntReportJson | null;
  persistence: PersistenceReportJson | null;
  sessionId: string;
  thresholds: Thresholds;
  stream: SseHandle | null;
  running: boolean;
}

const state: AppState = {
  report: null,
  persistence: null,
  sessionId: `tab-${Math.random().toString(36).slice(2)}`,
  thresholds: { minAgreement: 0, minMargin: 0 },
  stream: null,
  running: false,
};

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function payloadFromForm(): HuntPayload {
  const engines = ["lookup", "relations", "bisearch"].filter(
    (name) => byId<HTMLInputElement>(`engine-${name}`).checked,
  );
  const payload: HuntPayload = {
    raw_input: byId<HTMLInputElement>("float-input").value.trim(),
    engines,
    session_id: state.sessionId,
  };
  const level = byId<HTMLInputElement>("level").value;
  if (level) payload.level = Number(level);
  const tolerance = byId<HTMLInputElement>("tolerance").value.trim();
  if (tolerance) payload.tolerance = tolerance;
  const bases = byId<HTMLInputElement>("bases").value.trim();
  if (bases) {
    payload.relation_bases = bases.split(";").map(
      (v) => v.split(",").map((t) => t.trim()).filter(Boolean));
  }
  return payload;
}

function candidateRow(c: ServerCandidate, accepted: boolean, reason: string | null): HTMLElement {
  const row = document.createElement("div");
  row.className = accepted ? "candidate accepted" : "candidate rejected";
  const sign = c.margin >= 0 ? "+" : "";
  row.textContent =
    `${c.text}   agreement ${c.agreement}  entropy ${c.entropy10.toFixed(2)}` +
    `  margin ${sign}${c.margin.toFixed(2)}  ${c.verdict}` +
    (accepted ? "" : `   [${reason}]`) +
    (c.implicit_equation ? "   (implicit)" : "");
  row.title = `${c.source}\nvalue ${c.value}`;
  return row;
}

function renderReport(): void {
  const report = state.report;
  const list = byId<HTMLDivElement>("candidates");
  const scatterBox = byId<HTMLDivElement>("scatter-box");
  const footer = byId<HTMLDivElement>("footer");
  list.replaceChildren();
  if (!report) {
    renderScatter(scatterBox, { candidates: [], groups: [], input: {
      text: "", trusted_digits: 10, working_digits: 18, value: "", warnings: [] } },
      state.thresholds);
    footer.textContent = "";
    return;
  }
  renderRuler(byId<HTMLDivElement>("ruler"), report.input.value,
    report.input.trusted_digits);
  const decisions = applyThresholds(report.candidates, state.thresholds);
  for (const d of decisions) {
    list.appendChild(candidateRow(d.candidate, d.accepted, d.rejectReason));
  }
  const filtered = {
    ...report,
    candidates: decisions.map((d) => ({
      ...d.candidate, accepted: d.accepted, reject_reason: d.rejectReason,
    })),
  };
  renderScatter(scatterBox, filtered, state.thresholds, (hover) => {
    byId<HTMLDivElement>("tooltip").textContent = hover
      ? `${hover.text} | margin ${hover.margin.toFixed(2)} ${hover.verdict}` : "";
  });
  const acceptedCount = decisions.filter((d) => d.accepted).length;
  const stats = report.engine_stats
    .map((s) => `${s.engine}: ${s.candidates} in ${s.seconds.toFixed(2)}s${s.error ? ` (${s.error})` : ""}`)
    .join("  |  ");
  footer.textContent =
    `${acceptedCount} accepted / ${report.candidates.length} scored   ${stats}`;
  for (const warning of report.input.warnings) {
    const div = document.createElement("div");
    div.className = "warning";
    div.textContent = warning;
    footer.appendChild(div);
  }
}

function setRunning(running: boolean): void {
  state.running = running;
  byId<HTMLButtonElement>("run").disabled = running;
  byId<HTMLButtonElement>("cancel").disabled = !running;
}

async function runHunt(): Promise<void> {
  if (state.running) return;
  setRunning(true);
  const status = byId<HTMLDivElement>("status");
  status.textContent = "hunting...";
  try {
    const outcome = await postHunt(API_BASE, payloadFromForm());
    if (outcome.kind === "report") {
      state.report = outcome.report;
      state.thresholds = {
        minAgreement: outcome.report.thresholds.min_agreement,
        minMargin: outcome.report.thresholds.min_margin,
      };
      syncSliders();
    } else {
      const streamed: ServerCandidate[] = [];
      status.textContent = "hunting (streaming)...";
      await new Promise<void>((resolve) => {
        state.stream = streamJob(API_BASE, outcome.job, (event) => {
          const cand = event as ServerCandidate & { type: string };
          if (cand.type === "candidate") {
            streamed.push(cand);
            byId<HTMLDivElement>("candidates").appendChild(
              candidateRow(cand, cand.accepted, cand.reject_reason));
          }
        }, resolve);
      });
      state.stream = null;
      state.report = await fetchJobReport(API_BASE, outcome.job);
      state.thresholds = {
        minAgreement: state.report.thresholds.min_agreement,
        minMargin: state.report.thresholds.min_margin,
      };
      syncSliders();
    }
    status.textContent = "";
  } catch (err) {
    status.textContent = String(err);
  } finally {
    setRunning(false);
    renderReport();
  }
}

function cancelHunt(): void {
  if (state.stream) {
    state.stream.close();
    state.stream = null;
  }
  setRunning(false);
  byId<HTMLDivElement>("status").textContent = "cancelled";
}

function syncSliders(): void {
  byId<HTMLInputElement>("min-margin").value = String(state.thresholds.minMargin);
  byId<HTMLInputElement>("min-agreement").value = String(state.thresholds.minAgreement);
  byId<HTMLSpanElement>("min-margin-value").textContent =
    state.thresholds.minMargin.toFixed(1);
  byId<HTMLSpanElement>("min-agreement-value").textContent =
    String(state.thresholds.minAgreement);
}

async function thresholdsChanged(): Promise<void> {
  state.thresholds = {
    minMargin: Number(byId<HTMLInputElement>("min-margin").value),
    minAgreement: Number(byId<HTMLInputElement>("min-agreement").value),
  };
  syncSliders();
  renderReport(); // instant local filtering
  if (!state.report) return;
  try {
    // the server's re-filter is authoritative; it must agree with the local
    // pass candidate-for-candidate (accept_filter parity)
    const server = await refilterSession(API_BASE, state.sessionId,
      state.thresholds.minAgreement, state.thresholds.minMargin);
    const local = acceptedTexts(state.report.candidates, state.thresholds);
    const remote = server.candidates.filter((c) => c.accepted).map((c) => c.text);
    if (JSON.stringify(local) !== JSON.stringify(remote)) {
      console.warn("threshold parity drift", { local, remote });
    }
    state.report = server;
    renderReport();
  } catch {
    // session may have been evicted; the local filter remains correct
  }
}

async function runPersistence(extra?: number): Promise<void> {
  if (!state.report) return;
  const precisions = new Set<number>(
    state.persistence?.persistence.precisions ?? []);
  const trusted = state.report.input.trusted_digits;
  precisions.add(Math.max(5, Math.min(11, trusted)));
  precisions.add(trusted);
  if (extra) precisions.add(extra);
  const payload = { ...payloadFromForm(), precisions: [...precisions].sort((a, b) => a - b) };
  byId<HTMLDivElement>("status").textContent = "persistence run...";
  try {
    state.persistence = await postPersistence(API_BASE, payload);
    byId<HTMLDivElement>("status").textContent = "";
  } catch (err) {
    byId<HTMLDivElement>("status").textContent = String(err);
  }
  renderMatrix(byId<HTMLDivElement>("persistence-box"), state.persistence,
    (next) => void runPersistence(next));
}

export function bootstrap(): void {
  byId<HTMLButtonElement>("run").addEventListener("click", () => void runHunt());
  byId<HTMLButtonElement>("cancel").addEventListener("click", cancelHunt);
  byId<HTMLInputElement>("min-margin").addEventListener("change",
    () => void thresholdsChanged());
  byId<HTMLInputElement>("min-agreement").addEventListener("change",
    () => void thresholdsChanged());
  byId<HTMLButtonElement>("persist").addEventListener("click",
    () => void runPersistence());
  renderMatrix(byId<HTMLDivElement>("persistence-box"), null);
  renderReport();
}

if (typeof document !== "undefined" && document.readyState !== "loading" &&
    document.getElementById("run")) {
  bootstrap();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", () => {
    if (document.getElementById("run")) bootstrap();
  });
}
