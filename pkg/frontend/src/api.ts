/** JSON API client. The UI performs no medical logic; everything rendered
 * comes verbatim from these responses. */

export interface Finding {
  abnormality: string;
  segment: string;
  label: number;
  probability: number;
}

export interface PredictionResponse {
  result_code: string;
  findings: Finding[];
  report_text: string;
}

/** Base64-encoded PGM images of the preprocessed radiograph. */
export interface PreprocessResponse {
  full: string;
  seg1: string;
  seg2: string;
  seg3: string;
}

export type ApiErrorKind = "api" | "network" | "cancelled";

export class ApiError extends Error {
  constructor(
    public readonly kind: ApiErrorKind,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }

  /** Network failures get a retry affordance; API rejections do not. */
  get retryable(): boolean {
    return this.kind === "network";
  }
}

async function postImage<T>(url: string, file: Blob, signal: AbortSignal): Promise<T> {
  const body = new FormData();
  body.append("image", file);
  let response: Response;
  try {
    response = await fetch(url, { method: "POST", body, signal });
  } catch (err) {
    if (err instanceof DOMException && err.name === "AbortError") {
      throw new ApiError("cancelled", "Cancelled", "request cancelled");
    }
    throw new ApiError("network", "NetworkError", String(err));
  }
  if (!response.ok) {
    let code = `HTTP${response.status}`;
    let message = response.statusText;
    try {
      const payload = (await response.json()) as { code?: string; message?: string };
      if (payload.code) code = payload.code;
      if (payload.message) message = payload.message;
    } catch {
      // non-JSON error body: keep the HTTP status fallback
    }
    throw new ApiError("api", code, message);
  }
  return (await response.json()) as T;
}

/** At most one case in flight: starting a new upload aborts the previous one. */
export class ApiClient {
  private controller: AbortController | null = null;

  constructor(private readonly baseUrl: string = "") {}

  cancel(): void {
    this.controller?.abort();
    this.controller = null;
  }

  async uploadCase(file: Blob): Promise<{ prediction: PredictionResponse; segments: PreprocessResponse }> {
    this.cancel();
    const controller = new AbortController();
    this.controller = controller;
    const [prediction, segments] = await Promise.all([
      postImage<PredictionResponse>(`${this.baseUrl}/api/predict`, file, controller.signal),
      postImage<PreprocessResponse>(`${this.baseUrl}/api/preprocess`, file, controller.signal),
    ]);
    return { prediction, segments };
  }
}
