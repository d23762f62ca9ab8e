/** Pure HTML renderers for the review console. No DOM access here. */

import type { FeedbackDraft, VersionBump } from "./state.js";
import type {
  AlarmEntry,
  MarkovHint,
  RankedEntry,
  Recommendation,
  StatusPayload,
} from "./types.js";

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** Probabilities are always displayed with exactly three decimals. */
export function formatProb(p: number): string {
  return p.toFixed(3);
}

/** "42s ago", "5m ago", "3h ago", "2d ago" for a timestamp before `now`. */
export function relativeTime(iso: string, now: Date): string {
  const then = new Date(iso).getTime();
  if (Number.isNaN(then)) {
    return iso;
  }
  const seconds = Math.max(0, Math.floor((now.getTime() - then) / 1000));
  if (seconds < 60) return `${seconds}s ago`;
  const minutes = Math.floor(seconds / 60);
  if (minutes < 60) return `${minutes}m ago`;
  const hours = Math.floor(minutes / 60);
  if (hours < 24) return `${hours}h ago`;
  return `${Math.floor(hours / 24)}d ago`;
}

function probBar(p: number): string {
  const width = Math.max(0, Math.min(100, p * 100)).toFixed(1);
  return (
    `<span class="bar" role="img" aria-label="${formatProb(p)}">` +
    `<span class="bar-fill" style="width:${width}%"></span></span>`
  );
}

/** Ranked labels in service order, each with its probability and a bar. */
export function renderRanked(ranked: RankedEntry[]): string {
  const items = ranked
    .map(
      ([label, prob]) =>
        `<li><span class="label">${escapeHtml(label)}</span>` +
        `<span class="prob">${formatProb(prob)}</span>${probBar(prob)}</li>`,
    )
    .join("");
  return `<ol class="ranked">${items}</ol>`;
}

export function renderAlarmWindow(events: AlarmEntry[], now: Date): string {
  const rows = events
    .map(
      (ev) =>
        `<li><time datetime="${escapeHtml(ev.time_on)}">` +
        `${relativeTime(ev.time_on, now)}</time>` +
        `<span class="alarm-text">${escapeHtml(ev.text)}</span></li>`,
    )
    .join("");
  return `<ul class="alarm-window">${rows}</ul>`;
}

export function renderMarkovHints(hints: MarkovHint[] | null): string {
  if (!hints || hints.length === 0) {
    return "";
  }
  const items = hints
    .map(
      ([alarm, prob]) =>
        `<li>${escapeHtml(alarm)} <span class="prob">${formatProb(prob)}</span></li>`,
    )
    .join("");
  return (
    `<details class="markov"><summary>likely next alarms</summary>` +
    `<ul>${items}</ul></details>`
  );
}

function ratingOptions(selected: number | null): string {
  const placeholder = `<option value=""${selected === null ? " selected" : ""} disabled>rate…</option>`;
  const options = [1, 2, 3, 4, 5]
    .map(
      (r) =>
        `<option value="${r}"${selected === r ? " selected" : ""}>${r}</option>`,
    )
    .join("");
  return placeholder + options;
}

function feedbackForm(
  rec: Recommendation,
  draft: FeedbackDraft,
  threshold: number,
  error: string | null,
): string {
  const id = escapeHtml(rec.id);
  const needsCorrection =
    draft.verdict === "reject" &&
    draft.rating !== null &&
    draft.rating < threshold;
  return `
    <form class="resolve" data-id="${id}">
      <span class="choice">
        <label><input type="radio" name="verdict-${id}" value="accept" data-field="verdict" data-id="${id}"${draft.verdict === "accept" ? " checked" : ""}> accept</label>
        <label><input type="radio" name="verdict-${id}" value="reject" data-field="verdict" data-id="${id}"${draft.verdict === "reject" ? " checked" : ""}> reject</label>
      </span>
      <select data-field="rating" data-id="${id}" aria-label="rating">${ratingOptions(draft.rating)}</select>
      <input type="text" data-field="correction" data-id="${id}"
             placeholder="corrected repair action${needsCorrection ? " (required)" : ""}"
             value="${escapeHtml(draft.correction)}"${draft.verdict === "accept" ? " disabled" : ""}>
      <button type="button" data-action="resolve" data-id="${id}">resolve</button>
      ${error ? `<p class="error" role="alert">${escapeHtml(error)}</p>` : ""}
    </form>`;
}

export interface CardOptions {
  draft: FeedbackDraft;
  threshold: number;
  now: Date;
  error?: string | null;
}

/** A pending recommendation card with its resolve form. */
export function renderCard(rec: Recommendation, opts: CardOptions): string {
  return `
    <article class="card pending" data-rec="${escapeHtml(rec.id)}">
      <header>
        <span class="turbine">${escapeHtml(rec.turbine_id)}</span>
        <span class="status status-${rec.status}">${rec.status}</span>
        <time datetime="${escapeHtml(rec.created_at)}">${relativeTime(rec.created_at, opts.now)}</time>
        <span class="version">model v${rec.model_version}</span>
      </header>
      ${renderRanked(rec.ranked)}
      ${renderAlarmWindow(rec.alarm_window, opts.now)}
      ${renderMarkovHints(rec.markov_next)}
      ${feedbackForm(rec, opts.draft, opts.threshold, opts.error ?? null)}
    </article>`;
}

/** A resolved recommendation: read-only, no resolve controls. */
export function renderHistoryRow(rec: Recommendation, now: Date): string {
  const top = rec.ranked[0];
  const correction = rec.feedback?.corrected_label;
  const rating = rec.feedback?.rating;
  return `
    <li class="history-row" data-rec="${escapeHtml(rec.id)}">
      <span class="status status-${rec.status}">${rec.status}</span>
      <span class="turbine">${escapeHtml(rec.turbine_id)}</span>
      <span class="label">${top ? escapeHtml(top[0]) : "—"}</span>
      ${correction ? `<span class="correction">→ ${escapeHtml(correction)}</span>` : ""}
      ${typeof rating === "number" ? `<span class="rating">rated ${rating}/5</span>` : ""}
      <time datetime="${escapeHtml(rec.created_at)}">${relativeTime(rec.created_at, now)}</time>
    </li>`;
}

export interface QueueOptions {
  drafts: (id: string) => FeedbackDraft;
  errors: (id: string) => string | null;
  threshold: number;
  now: Date;
}

export function renderQueue(pending: Recommendation[], opts: QueueOptions): string {
  if (pending.length === 0) {
    return `<section class="queue"><h2>review queue</h2>
      <p class="empty">No pending recommendations — the queue is clear.</p></section>`;
  }
  const cards = pending
    .map((rec) =>
      renderCard(rec, {
        draft: opts.drafts(rec.id),
        threshold: opts.threshold,
        now: opts.now,
        error: opts.errors(rec.id),
      }),
    )
    .join("");
  return `<section class="queue"><h2>review queue (${pending.length})</h2>${cards}</section>`;
}

export function renderHistory(resolved: Recommendation[], now: Date): string {
  if (resolved.length === 0) {
    return `<section class="history"><h2>history</h2>
      <p class="empty">Nothing resolved yet.</p></section>`;
  }
  const rows = resolved.map((rec) => renderHistoryRow(rec, now)).join("");
  return `<section class="history"><h2>history (${resolved.length})</h2><ul>${rows}</ul></section>`;
}

export interface StatusPanelOptions {
  bump?: VersionBump | null;
  retrainMessage?: string | null;
  stale?: boolean;
}

export function renderStatusPanel(
  status: StatusPayload | null,
  opts: StatusPanelOptions = {},
): string {
  if (!status) {
    return `<aside class="status-panel"><h2>service</h2>
      <p class="empty">Waiting for the service…</p></aside>`;
  }
  const rate = status.accept_rate;
  const target = status.policy.acceptance_target;
  const rateBelowTarget = rate !== null && rate < target;
  const rateText =
    rate === null ? "no feedback yet" : `${(rate * 100).toFixed(0)}%`;
  const bufferFull = status.buffer_size >= status.policy.min_new_examples;
  const eligible = bufferFull || rateBelowTarget;
  const training = status.training_state === "training";
  const bump = opts.bump;
  return `
    <aside class="status-panel">
      <h2>service</h2>
      ${opts.stale ? `<p class="stale" role="alert">stale — last sync over 30s ago</p>` : ""}
      ${bump ? `<p class="bump" role="status">model updated: v${bump.from} → v${bump.to}</p>` : ""}
      <dl>
        <dt>model version</dt>
        <dd class="model-version">${status.model_version ?? "none loaded"}${status.bidirectional === null ? "" : status.bidirectional ? " (bidirectional)" : " (unidirectional)"}</dd>
        <dt>accept rate</dt>
        <dd class="accept-rate${rateBelowTarget ? " warn" : ""}">${rateText}
          <span class="target">target ${(target * 100).toFixed(0)}%</span>
          ${rateBelowTarget ? `<span class="badge warn">below target</span>` : ""}</dd>
        <dt>correction buffer</dt>
        <dd class="buffer">${status.buffer_size}/${status.policy.min_new_examples}
          ${eligible ? `<span class="badge eligible">retrain eligible</span>` : ""}</dd>
        <dt>training</dt>
        <dd class="training-state">${training ? `<span class="badge training">retraining…</span>` : "idle"}</dd>
      </dl>
      <button type="button" data-action="retrain"${training ? " disabled" : ""}>retrain now</button>
      ${opts.retrainMessage ? `<p class="retrain-message">${escapeHtml(opts.retrainMessage)}</p>` : ""}
      <p class="legend">Ratings run 1 (useless) to 5 (spot on); rejections rated below
        ${status.policy.rating_threshold} must include the correct repair action.</p>
    </aside>`;
}

export function renderBanner(message: string | null): string {
  if (!message) {
    return "";
  }
  return `<div class="banner" role="alert">service unreachable: ${escapeHtml(message)} — retrying</div>`;
}

export interface AppView {
  pending: Recommendation[];
  resolved: Recommendation[];
  status: StatusPayload | null;
  connectionError: string | null;
  retrainMessage: string | null;
  bump: VersionBump | null;
  stale: boolean;
  threshold: number;
  drafts: (id: string) => FeedbackDraft;
  errors: (id: string) => string | null;
  now: Date;
}

/** Assemble the whole page from one immutable view snapshot. */
export function renderApp(view: AppView): string {
  return `
    ${renderBanner(view.connectionError)}
    <main class="layout">
      <div class="work">
        ${renderQueue(view.pending, {
          drafts: view.drafts,
          errors: view.errors,
          threshold: view.threshold,
          now: view.now,
        })}
        ${renderHistory(view.resolved, view.now)}
      </div>
      ${renderStatusPanel(view.status, {
        bump: view.bump,
        retrainMessage: view.retrainMessage,
        stale: view.stale,
      })}
    </main>`;
}
