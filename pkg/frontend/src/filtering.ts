/** Client-side mirror of the server's accept filter.
 *
 * The invariant the tests pin down: applying this to a report's candidate
 * pool with some thresholds yields exactly the accepted set a server
 * re-query with those thresholds returns, candidate for candidate.  Both
 * thresholds are closed (>=); a candidate that failed its de-alias
 * verification is rejected regardless.
 */

import type { ServerCandidate, Thresholds } from "./types.js";

export interface FilterDecision {
  candidate: ServerCandidate;
  accepted: boolean;
  rejectReason: "agreement" | "margin" | "verification" | null;
}

export function decide(candidate: ServerCandidate, thresholds: Thresholds): FilterDecision {
  if (candidate.agreement < thresholds.minAgreement) {
    return { candidate, accepted: false, rejectReason: "agreement" };
  }
  if (candidate.margin < thresholds.minMargin) {
    return { candidate, accepted: false, rejectReason: "margin" };
  }
  if (candidate.suspect) {
    return { candidate, accepted: false, rejectReason: "verification" };
  }
  return { candidate, accepted: true, rejectReason: null };
}

export function applyThresholds(
  candidates: readonly ServerCandidate[],
  thresholds: Thresholds,
): FilterDecision[] {
  return candidates.map((c) => decide(c, thresholds));
}

export function acceptedTexts(
  candidates: readonly ServerCandidate[],
  thresholds: Thresholds,
): string[] {
  return applyThresholds(candidates, thresholds)
    .filter((d) => d.accepted)
    .map((d) => d.candidate.text);
}
