/** Thin DOM layer: renders AppState, wires callbacks. No medical logic. */

import type { AppState, CaseView } from "./state.js";
import { badgeFromFindings, DECISION_THRESHOLD, formatProbability } from "./state.js";
import { base64ToBytes, decodePgm, drawPgmToCanvas } from "./pgm.js";

export interface ViewCallbacks {
  onUpload(file: File): void;
  onEdit(text: string): void;
  onExport(): void;
  onReset(): void;
  onRetry(): void;
}

const SEGMENT_KEYS = [
  ["full", "128×128"],
  ["seg1", "segment I"],
  ["seg2", "segment II"],
  ["seg3", "segment III"],
] as const;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderFindings(view: CaseView): HTMLElement {
  const table = el("table", "findings");
  const head = el("tr");
  for (const h of ["abnormality", "segment", "label", "probability"]) {
    head.appendChild(el("th", undefined, h));
  }
  table.appendChild(head);
  for (const f of view.findings) {
    const row = el("tr", f.label === 1 ? "finding positive" : "finding");
    row.appendChild(el("td", undefined, f.abnormality));
    row.appendChild(el("td", undefined, f.segment));
    row.appendChild(el("td", undefined, String(f.label)));
    const prob = el("td", "prob", formatProbability(f.probability));
    prob.appendChild(
      el("span", "threshold-marker", f.probability >= DECISION_THRESHOLD ? " ≥ 0.5" : " < 0.5"),
    );
    row.appendChild(prob);
    table.appendChild(row);
  }
  return table;
}

function renderSegments(view: CaseView): HTMLElement {
  const strip = el("div", "segments");
  for (const [key, label] of SEGMENT_KEYS) {
    const cell = el("figure", "segment");
    const canvas = el("canvas");
    try {
      drawPgmToCanvas(decodePgm(base64ToBytes(view.segments[key])), canvas);
    } catch {
      cell.appendChild(el("figcaption", "segment-error", `${label}: unavailable`));
      strip.appendChild(cell);
      continue;
    }
    cell.appendChild(canvas);
    cell.appendChild(el("figcaption", undefined, label));
    strip.appendChild(cell);
  }
  return strip;
}

function renderCase(view: CaseView, callbacks: ViewCallbacks): HTMLElement {
  const root = el("section", "case");

  const badge = el("div", "badge", badgeFromFindings(view.findings));
  badge.id = "result-code";
  root.appendChild(badge);

  root.appendChild(renderSegments(view));
  root.appendChild(renderFindings(view));

  const textarea = el("textarea", "report");
  textarea.id = "report-text";
  textarea.value = view.reportText;
  textarea.addEventListener("input", () => callbacks.onEdit(textarea.value));
  root.appendChild(textarea);

  const controls = el("div", "controls");
  const exportBtn = el("button", undefined, "Export .txt");
  exportBtn.id = "export";
  exportBtn.addEventListener("click", () => callbacks.onExport());
  const resetBtn = el("button", undefined, "Reset report");
  resetBtn.id = "reset";
  resetBtn.addEventListener("click", () => callbacks.onReset());
  controls.appendChild(exportBtn);
  controls.appendChild(resetBtn);
  root.appendChild(controls);

  return root;
}

export function render(container: HTMLElement, state: AppState, callbacks: ViewCallbacks): void {
  container.replaceChildren();

  const uploader = el("div", "uploader");
  const input = el("input");
  input.type = "file";
  input.accept = ".png,.pgm,image/png";
  input.id = "file-input";
  input.addEventListener("change", () => {
    const file = input.files?.[0];
    if (file) callbacks.onUpload(file);
  });
  uploader.appendChild(input);
  container.appendChild(uploader);

  switch (state.status) {
    case "idle":
      container.appendChild(el("p", "hint", "Upload a frontal chest radiograph (PNG or PGM)."));
      break;
    case "loading":
      container.appendChild(el("p", "hint", "Analyzing…"));
      break;
    case "error": {
      const box = el("div", "error");
      box.appendChild(el("p", undefined, `${state.code}: ${state.message}`));
      if (state.retryable) {
        const retry = el("button", undefined, "Retry");
        retry.id = "retry";
        retry.addEventListener("click", () => callbacks.onRetry());
        box.appendChild(retry);
      }
      container.appendChild(box);
      break;
    }
    case "ready":
      container.appendChild(renderCase(state.caseView, callbacks));
      break;
  }
}

export function downloadText(filename: string, text: string): void {
  const blob = new Blob([text], { type: "text/plain;charset=utf-8" });
  const url = URL.createObjectURL(blob);
  const a = document.createElement("a");
  a.href = url;
  a.download = filename;
  a.click();
  URL.revokeObjectURL(url);
}
