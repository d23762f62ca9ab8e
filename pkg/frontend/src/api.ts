/** Thin typed client for the recommendation service's JSON API. */

import type {
  FeedbackRequest,
  Recommendation,
  RecommendationStatus,
  RetrainResponse,
  StatusPayload,
} from "./types.js";

/** Error carrying the HTTP status and the service's `detail` message. */
export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

/** Minimal fetch signature so tests can inject a canned transport. */
export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface ListOptions {
  status?: RecommendationStatus;
  turbineId?: string;
  limit?: number;
}

async function detailOf(res: Response): Promise<string> {
  try {
    const body: unknown = await res.json();
    if (body && typeof body === "object" && "detail" in body) {
      const detail = (body as { detail: unknown }).detail;
      return typeof detail === "string" ? detail : JSON.stringify(detail);
    }
    return JSON.stringify(body);
  } catch {
    return res.statusText || "request failed";
  }
}

export class ApiClient {
  private readonly base: string;
  private readonly token: string | null;
  private readonly fetchFn: FetchLike;

  constructor(
    baseUrl = "",
    token: string | null = null,
    fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.token = token;
    this.fetchFn = fetchFn;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = { accept: "application/json" };
    if (this.token) {
      headers["x-auth-token"] = this.token;
    }
    const init: RequestInit = { method, headers };
    if (body !== undefined) {
      headers["content-type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(this.base + path, init);
    if (!res.ok) {
      throw new ApiError(res.status, await detailOf(res));
    }
    return (await res.json()) as T;
  }

  /** GET /api/v1/recommendations with optional status/turbine filters. */
  listRecommendations(opts: ListOptions = {}): Promise<Recommendation[]> {
    const query = new URLSearchParams();
    if (opts.status) query.set("status", opts.status);
    if (opts.turbineId) query.set("turbine_id", opts.turbineId);
    if (opts.limit !== undefined) query.set("limit", String(opts.limit));
    const suffix = query.toString() ? `?${query.toString()}` : "";
    return this.request("GET", `/api/v1/recommendations${suffix}`);
  }

  /** GET /api/v1/turbines/{id}/recommendations — builds a fresh recommendation. */
  recommendFor(turbineId: string, k?: number): Promise<Recommendation[]> {
    const suffix = k !== undefined ? `?k=${k}` : "";
    return this.request(
      "GET",
      `/api/v1/turbines/${encodeURIComponent(turbineId)}/recommendations${suffix}`,
    );
  }

  /** POST /api/v1/feedback — resolves a pending recommendation. */
  submitFeedback(req: FeedbackRequest): Promise<Recommendation> {
    return this.request("POST", "/api/v1/feedback", req);
  }

  /** GET /api/v1/status. */
  getStatus(): Promise<StatusPayload> {
    return this.request("GET", "/api/v1/status");
  }

  /** POST /api/v1/retrain. */
  triggerRetrain(wait = false): Promise<RetrainResponse> {
    const suffix = wait ? "?wait=true" : "";
    return this.request("POST", `/api/v1/retrain${suffix}`);
  }
}
