import { ApiClient, ApiError } from "./api.js";
import type { AppState } from "./state.js";
import { createCase, editReport, exportFilename, exportText, resetReport } from "./state.js";
import { downloadText, render, ViewCallbacks } from "./view.js";

const client = new ApiClient();
const container = document.getElementById("app") as HTMLElement;

let state: AppState = { status: "idle" };
let lastFile: File | null = null;

function setState(next: AppState, rerender = true): void {
  state = next;
  if (rerender) render(container, state, callbacks);
}

async function upload(file: File): Promise<void> {
  lastFile = file;
  setState({ status: "loading" });
  try {
    const { prediction, segments } = await client.uploadCase(file);
    setState({ status: "ready", caseView: createCase(prediction, segments) });
  } catch (err) {
    if (err instanceof ApiError) {
      if (err.kind === "cancelled") return; // superseded by a newer upload
      setState({ status: "error", code: err.code, message: err.message, retryable: err.retryable });
    } else {
      setState({ status: "error", code: "UnknownError", message: String(err), retryable: true });
    }
  }
}

const callbacks: ViewCallbacks = {
  onUpload: (file) => void upload(file),
  onEdit: (text) => {
    if (state.status === "ready") {
      // keep the textarea's own DOM state; no re-render needed
      setState({ status: "ready", caseView: editReport(state.caseView, text) }, false);
    }
  },
  onExport: () => {
    if (state.status === "ready") {
      downloadText(exportFilename(state.caseView), exportText(state.caseView));
    }
  },
  onReset: () => {
    if (state.status === "ready") {
      setState({ status: "ready", caseView: resetReport(state.caseView) });
    }
  },
  onRetry: () => {
    if (lastFile) void upload(lastFile);
  },
};

render(container, state, callbacks);
