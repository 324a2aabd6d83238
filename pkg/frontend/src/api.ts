/** Thin client over the versioned JSON/SSE API. */

import type { HuntReportJson, PersistenceReportJson } from "./types.js";

export interface HuntPayload {
  raw_input: string;
  engines: string[];
  tables?: string[];
  level?: number;
  tolerance?: string;
  min_margin?: number;
  min_agreement?: number | null;
  relation_bases?: string[][];
  session_id?: string;
  precisions?: number[];
}

export interface JobTicket {
  job_id: string;
  status_url: string;
  events_url: string;
}

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(`${status}: ${detail}`);
  }
}

async function post<T>(base: string, path: string, payload: unknown): Promise<T> {
  const resp = await fetch(`${base}${path}`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  });
  const body = await resp.json();
  if (!resp.ok && resp.status !== 202) {
    throw new ApiError(resp.status, JSON.stringify(body.detail ?? body));
  }
  return body as T;
}

export async function postHunt(base: string, payload: HuntPayload):
    Promise<{ kind: "report"; report: HuntReportJson } | { kind: "job"; job: JobTicket }> {
  const resp = await fetch(`${base}/api/v1/hunt`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(payload),
  });
  const body = await resp.json();
  if (resp.status === 202) {
    return { kind: "job", job: body as JobTicket };
  }
  if (!resp.ok) {
    throw new ApiError(resp.status, JSON.stringify(body.detail ?? body));
  }
  return { kind: "report", report: body as HuntReportJson };
}

export function postPersistence(base: string, payload: HuntPayload):
    Promise<PersistenceReportJson> {
  return post(base, "/api/v1/persistence", payload);
}

export function refilterSession(base: string, sessionId: string,
                                minAgreement: number | null,
                                minMargin: number): Promise<HuntReportJson> {
  return post(base, `/api/v1/sessions/${sessionId}/thresholds`,
    { min_agreement: minAgreement, min_margin: minMargin });
}

export async function fetchJobReport(base: string, ticket: JobTicket,
                                     pollMs = 500): Promise<HuntReportJson> {
  for (;;) {
    const resp = await fetch(`${base}${ticket.status_url}`);
    const body = await resp.json();
    if (body.status === "done") return body.report as HuntReportJson;
    if (body.status === "error") throw new ApiError(500, body.error);
    await new Promise((resolve) => setTimeout(resolve, pollMs));
  }
}

/** Parse one SSE frame body ("data: {...}") into its JSON payload. */
export function parseSseFrame(frame: string): unknown | null {
  const lines = frame.split("\n").filter((l) => l.startsWith("data: "));
  if (lines.length === 0) return null;
  return JSON.parse(lines.map((l) => l.slice("data: ".length)).join(""));
}

export interface SseHandle {
  close(): void;
}

export function streamJob(base: string, ticket: JobTicket,
                          onEvent: (event: unknown) => void,
                          onDone: () => void): SseHandle {
  const source = new EventSource(`${base}${ticket.events_url}`);
  source.onmessage = (message) => {
    const event = JSON.parse(message.data);
    if (event.type === "done") {
      source.close();
      onDone();
      return;
    }
    onEvent(event);
  };
  source.onerror = () => {
    source.close();
    onDone();
  };
  return { close: () => source.close() };
}
