/** Client-side state for the review console: queue, drafts, validation, status. */

import { ApiClient, ApiError } from "./api.js";
import type {
  Recommendation,
  RetrainResponse,
  StatusPayload,
  Verdict,
} from "./types.js";

/** In-progress feedback form values for one recommendation card. */
export interface FeedbackDraft {
  verdict: Verdict;
  /** null until the reviewer picks a rating. */
  rating: number | null;
  correction: string;
}

export interface ValidationIssue {
  field: "rating" | "verdict" | "correction";
  message: string;
}

export interface VersionBump {
  from: number;
  to: number;
}

export type ResolveResult =
  | { ok: true; rec: Recommendation }
  | { ok: false; issue: ValidationIssue; sent: false }
  | { ok: false; message: string; sent: true; conflict: boolean };

const FALLBACK_RATING_THRESHOLD = 3;

export function defaultDraft(): FeedbackDraft {
  return { verdict: "accept", rating: null, correction: "" };
}

/**
 * Validate a draft against the service's feedback rules without touching the
 * network. Returns null when the draft is submittable.
 */
export function validateDraft(
  draft: FeedbackDraft,
  ratingThreshold: number,
): ValidationIssue | null {
  if (draft.verdict !== "accept" && draft.verdict !== "reject") {
    return { field: "verdict", message: "choose accept or reject" };
  }
  if (
    draft.rating === null ||
    !Number.isInteger(draft.rating) ||
    draft.rating < 1 ||
    draft.rating > 5
  ) {
    return { field: "rating", message: "pick a rating from 1 to 5" };
  }
  const correction = draft.correction.trim();
  if (draft.verdict === "accept" && correction !== "") {
    return {
      field: "correction",
      message: "corrections only apply to rejections — clear the field or reject",
    };
  }
  if (
    draft.verdict === "reject" &&
    draft.rating < ratingThreshold &&
    correction === ""
  ) {
    return {
      field: "correction",
      message: `a corrected repair action is required when rejecting below rating ${ratingThreshold}`,
    };
  }
  return null;
}

export class ReviewStore {
  private readonly api: ApiClient;
  private recs = new Map<string, Recommendation>();
  private order: string[] = [];
  private readonly drafts = new Map<string, FeedbackDraft>();
  /** Inline per-card error messages (validation or service rejections). */
  readonly cardErrors = new Map<string, string>();

  status: StatusPayload | null = null;
  /** Connectivity banner text; null when the last refresh succeeded. */
  connectionError: string | null = null;
  /** Message from the most recent retrain attempt, shown by the status panel. */
  retrainMessage: string | null = null;
  /** Set when a status refresh observes the model version increase. */
  lastVersionBump: VersionBump | null = null;
  /** Epoch millis of the last successful sync, for the stale indicator. */
  lastSyncAt: number | null = null;

  constructor(api: ApiClient) {
    this.api = api;
  }

  // -- data ingestion --------------------------------------------------------

  /** Replace the local queue with the server's listing. */
  ingest(recs: Recommendation[]): void {
    this.recs = new Map(recs.map((rec) => [rec.id, rec]));
    this.order = recs.map((rec) => rec.id);
    for (const id of [...this.drafts.keys()]) {
      const rec = this.recs.get(id);
      if (!rec || rec.status !== "pending") {
        this.drafts.delete(id);
      }
    }
  }

  /** Merge one updated recommendation (e.g. a feedback response). */
  upsert(rec: Recommendation): void {
    if (!this.recs.has(rec.id)) {
      this.order.unshift(rec.id);
    }
    this.recs.set(rec.id, rec);
  }

  get(id: string): Recommendation | undefined {
    return this.recs.get(id);
  }

  all(): Recommendation[] {
    return this.order
      .map((id) => this.recs.get(id))
      .filter((rec): rec is Recommendation => rec !== undefined);
  }

  /** Split the queue into open work and the resolved history. */
  partition(): { pending: Recommendation[]; resolved: Recommendation[] } {
    const pending: Recommendation[] = [];
    const resolved: Recommendation[] = [];
    for (const rec of this.all()) {
      (rec.status === "pending" ? pending : resolved).push(rec);
    }
    return { pending, resolved };
  }

  // -- drafts and validation ---------------------------------------------------

  draftFor(id: string): FeedbackDraft {
    let draft = this.drafts.get(id);
    if (!draft) {
      draft = defaultDraft();
      this.drafts.set(id, draft);
    }
    return draft;
  }

  setDraft(id: string, patch: Partial<FeedbackDraft>): FeedbackDraft {
    const next = { ...this.draftFor(id), ...patch };
    this.drafts.set(id, next);
    return next;
  }

  ratingThreshold(): number {
    return this.status?.policy.rating_threshold ?? FALLBACK_RATING_THRESHOLD;
  }

  // -- network actions ---------------------------------------------------------

  /** Refresh the queue listing; failures raise the connectivity banner. */
  async refreshList(): Promise<void> {
    try {
      this.ingest(await this.api.listRecommendations({ limit: 200 }));
      this.markSynced();
    } catch (err) {
      this.connectionError = messageOf(err);
    }
  }

  /** Refresh service status, recording a model-version bump when one appears. */
  async refreshStatus(): Promise<void> {
    try {
      const next = await this.api.getStatus();
      const prev = this.status?.model_version;
      if (
        typeof prev === "number" &&
        typeof next.model_version === "number" &&
        next.model_version > prev
      ) {
        this.lastVersionBump = { from: prev, to: next.model_version };
      }
      this.status = next;
      this.markSynced();
    } catch (err) {
      this.connectionError = messageOf(err);
    }
  }

  /** One poll tick: queue plus status. */
  async refresh(): Promise<void> {
    await this.refreshList();
    await this.refreshStatus();
  }

  /**
   * Resolve one recommendation from its current draft. Invalid drafts are
   * rejected locally — no request is sent — with the issue recorded for the
   * card. On success the service's response replaces the local row, which
   * moves the card from the queue to the history.
   */
  async resolve(id: string): Promise<ResolveResult> {
    const draft = this.draftFor(id);
    const issue = validateDraft(draft, this.ratingThreshold());
    if (issue) {
      this.cardErrors.set(id, issue.message);
      return { ok: false, issue, sent: false };
    }
    const correction = draft.correction.trim();
    try {
      const rec = await this.api.submitFeedback({
        recommendation_id: id,
        rating: draft.rating as number,
        verdict: draft.verdict,
        corrected_label:
          draft.verdict === "reject" && correction !== "" ? correction : null,
        actor: "review-ui",
      });
      this.upsert(rec);
      this.drafts.delete(id);
      this.cardErrors.delete(id);
      return { ok: true, rec };
    } catch (err) {
      const message = messageOf(err);
      this.cardErrors.set(id, message);
      const conflict = err instanceof ApiError && err.status === 409;
      if (conflict) {
        // Someone else resolved it first; fetch their outcome.
        await this.refreshList();
      }
      return { ok: false, message, sent: true, conflict };
    }
  }

  /** Ask the service to retrain; outcome lands in retrainMessage. */
  async retrain(): Promise<RetrainResponse | null> {
    try {
      const res = await this.api.triggerRetrain();
      this.retrainMessage = res.started
        ? `retraining started on ${res.buffer_size} buffered corrections`
        : "retraining not started";
      await this.refreshStatus();
      return res;
    } catch (err) {
      this.retrainMessage = messageOf(err);
      return null;
    }
  }

  // -- freshness ----------------------------------------------------------------

  markSynced(now: number = Date.now()): void {
    this.connectionError = null;
    this.lastSyncAt = now;
  }

  /** True once the view has gone without a successful sync for too long. */
  isStale(now: number = Date.now(), staleAfterMs = 30_000): boolean {
    return this.lastSyncAt !== null && now - this.lastSyncAt > staleAfterMs;
  }
}

function messageOf(err: unknown): string {
  if (err instanceof ApiError) {
    return err.detail;
  }
  return err instanceof Error ? err.message : String(err);
}
