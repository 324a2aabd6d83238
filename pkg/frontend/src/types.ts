/** JSON shapes of the /api/v1 service. Field names are the wire contract. */

export interface ServerCandidate {
  text: string;
  value: string;
  agreement: number;
  entropy10: number;
  margin: number;
  verdict: string;
  source: string;
  accepted: boolean;
  reject_reason: string | null;
  suspect: boolean;
  implicit_equation: string | null;
}

export interface GroupJson {
  representative: number;
  members: number[];
  stable_from: number | null;
}

export interface EngineStatsJson {
  engine: string;
  seconds: number;
  candidates: number;
  error: string | null;
  extra: Record<string, unknown>;
}

export interface HuntReportJson {
  input: {
    text: string;
    trusted_digits: number;
    working_digits: number;
    value: string;
    warnings: string[];
  };
  thresholds: { min_agreement: number; min_margin: number };
  candidates: ServerCandidate[];
  groups: GroupJson[];
  engine_stats: EngineStatsJson[];
  session_id?: string;
}

export interface PersistenceEntryJson {
  text: string;
  presence: boolean[];
  stable_from: number | null;
  status?: "stable" | "transient" | "new-at-max";
}

export interface PersistenceReportJson extends HuntReportJson {
  persistence: {
    precisions: number[];
    entries: PersistenceEntryJson[];
  };
}

export interface Thresholds {
  minAgreement: number;
  minMargin: number;
}
