/** Pure view-state: no DOM, no fetch. */

import type { Finding, PredictionResponse, PreprocessResponse } from "./api.js";

export interface CaseView {
  resultCode: string;
  findings: Finding[];
  /** Machine-generated report, kept untouched so reset can restore it. */
  originalReport: string;
  /** Current textarea contents. */
  reportText: string;
  segments: PreprocessResponse;
}

export type AppState =
  | { status: "idle" }
  | { status: "loading" }
  | { status: "error"; code: string; message: string; retryable: boolean }
  | { status: "ready"; caseView: CaseView };

export function createCase(
  prediction: PredictionResponse,
  segments: PreprocessResponse,
): CaseView {
  return {
    resultCode: prediction.result_code,
    findings: prediction.findings.map((f) => ({ ...f })),
    originalReport: prediction.report_text,
    reportText: prediction.report_text,
    segments,
  };
}

export function editReport(view: CaseView, text: string): CaseView {
  return { ...view, reportText: text };
}

export function resetReport(view: CaseView): CaseView {
  return { ...view, reportText: view.originalReport };
}

/** Exported bytes are exactly the current textarea contents. */
export function exportText(view: CaseView): string {
  return view.reportText;
}

export function exportFilename(view: CaseView): string {
  return `report_${view.resultCode}.txt`;
}

/** The badge must equal the concatenation of the displayed labels. */
export function badgeFromFindings(findings: Finding[]): string {
  return findings.map((f) => String(f.label)).join("");
}

export function formatProbability(p: number): string {
  return p.toFixed(3);
}

export const DECISION_THRESHOLD = 0.5;
