import type {
  CalibrationPayload,
  DistributionPayload,
  LabelSubmission,
  NextBatchResponse,
  RoundInfo,
  SubmitResponse,
  SurveyAggregate,
  SurveyPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`HTTP ${status}: ${typeof detail === "string" ? detail : JSON.stringify(detail)}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    // wrap the global so the call is not bound to this client instance
    this.fetchImpl = fetchImpl ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      body = null;
    }
    if (!response.ok) {
      const detail =
        body !== null && typeof body === "object" && "detail" in body
          ? (body as { detail: unknown }).detail
          : body;
      throw new ApiError(response.status, detail);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  currentRound(): Promise<RoundInfo> {
    return this.request("/rounds/current");
  }

  nextBatch(annotator: string): Promise<NextBatchResponse> {
    return this.request(`/batches/next?annotator=${encodeURIComponent(annotator)}`);
  }

  submitLabels(submission: LabelSubmission): Promise<SubmitResponse> {
    return this.post("/labels", submission);
  }

  postSurvey(payload: SurveyPayload): Promise<{ stored: boolean }> {
    return this.post("/survey", payload);
  }

  surveyAggregate(): Promise<SurveyAggregate> {
    return this.request("/survey/aggregate");
  }

  calibration(): Promise<CalibrationPayload> {
    return this.request("/calibration");
  }

  distribution(): Promise<DistributionPayload> {
    return this.request("/stats/distribution");
  }
}
