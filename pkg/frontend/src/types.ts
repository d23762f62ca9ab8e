/** Shapes exchanged with the recommendation service's JSON API. */

/** One alarm event inside a recommendation's context window. */
export interface AlarmEntry {
  time_on: string;
  text: string;
}

/** One ranked prediction: [repair label, probability]. */
export type RankedEntry = [string, number];

/** One next-alarm hint from the transition model: [alarm text, probability]. */
export type MarkovHint = [string, number];

export type RecommendationStatus =
  | "pending"
  | "accepted"
  | "rejected"
  | "corrected";

export type Verdict = "accept" | "reject";

/** Feedback record echoed back by the service after a resolution. */
export interface FeedbackEcho {
  recommendation_id: string;
  rating: number;
  verdict: Verdict;
  corrected_label: string | null;
  actor: string;
  at: string;
}

/** A recommendation as returned by the service. */
export interface Recommendation {
  id: string;
  turbine_id: string;
  created_at: string;
  alarm_window: AlarmEntry[];
  ranked: RankedEntry[];
  markov_next: MarkovHint[] | null;
  status: RecommendationStatus;
  model_version: number;
  /** Present only on the response to a feedback submission. */
  feedback?: FeedbackEcho;
}

/** Body of POST /api/v1/feedback. */
export interface FeedbackRequest {
  recommendation_id: string;
  rating: number;
  verdict: Verdict;
  corrected_label?: string | null;
  actor?: string;
}

/** Retraining thresholds, read from the service so the client never hardcodes them. */
export interface PolicyInfo {
  rating_threshold: number;
  min_new_examples: number;
  acceptance_target: number;
}

/** Payload of GET /api/v1/status. */
export interface StatusPayload {
  model_version: number | null;
  model_loaded: boolean;
  bidirectional: boolean | null;
  num_classes: number | null;
  labels: string[];
  accept_rate: number | null;
  buffer_size: number;
  training_state: "idle" | "training";
  last_retrain: Record<string, unknown> | null;
  policy: PolicyInfo;
}

/** Payload of POST /api/v1/retrain. */
export interface RetrainResponse {
  started: boolean;
  buffer_size: number;
  accept_rate: number | null;
  training_state: string;
}

/** Static configuration loaded from config.json next to the page. */
export interface AppConfig {
  /** Base URL of the service API; "" means same origin. */
  apiBase: string;
  /** Poll interval for queue and status refreshes, in milliseconds. */
  pollMs: number;
  /** Optional static auth token sent as X-Auth-Token. */
  token?: string | null;
}

export const DEFAULT_CONFIG: AppConfig = {
  apiBase: "",
  pollMs: 5000,
  token: null,
};
