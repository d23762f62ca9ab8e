/** Canned service payloads and a recording fake fetch for the test suites. */

import type { FetchLike } from "../src/api.js";
import type { Recommendation, StatusPayload } from "../src/types.js";

export function makeRec(overrides: Partial<Recommendation> = {}): Recommendation {
  return {
    id: "rec-1",
    turbine_id: "T01",
    created_at: "2024-03-01T10:00:00+00:00",
    alarm_window: [
      { time_on: "2024-03-01T09:50:00+00:00", text: "gearbox oil pressure low" },
      { time_on: "2024-03-01T09:55:00+00:00", text: "gearbox temperature high" },
      { time_on: "2024-03-01T10:00:00+00:00", text: "drivetrain vibration trip" },
    ],
    ranked: [
      ["replace gearbox", 0.7124],
      ["replace oil filter", 0.2],
      ["replace pitch motor", 0.0876],
    ],
    markov_next: [["generator overspeed warning", 0.5]],
    status: "pending",
    model_version: 1,
    ...overrides,
  };
}

export function makeStatus(overrides: Partial<StatusPayload> = {}): StatusPayload {
  return {
    model_version: 1,
    model_loaded: true,
    bidirectional: true,
    num_classes: 8,
    labels: ["replace gearbox", "replace oil filter", "replace pitch motor"],
    accept_rate: 0.9,
    buffer_size: 0,
    training_state: "idle",
    last_retrain: null,
    policy: {
      rating_threshold: 3,
      min_new_examples: 10,
      acceptance_target: 0.7,
    },
    ...overrides,
  };
}

export interface RecordedCall {
  method: string;
  url: string;
  path: string;
  body: unknown;
  headers: Record<string, string>;
}

export interface RouteReply {
  status?: number;
  body: unknown;
}

export type RouteHandler = (
  url: URL,
  call: RecordedCall,
) => RouteReply | undefined;

/**
 * Build a fetch double from a `"METHOD /path"` route table. Every request is
 * recorded (method, path, parsed JSON body, headers) so tests can assert on
 * exactly what went over the wire — including that nothing did.
 */
export function fakeFetch(table: Record<string, RouteHandler>): {
  fetchFn: FetchLike;
  calls: RecordedCall[];
} {
  const calls: RecordedCall[] = [];
  const fetchFn: FetchLike = (rawUrl, init) => {
    const url = new URL(rawUrl, "http://fixture.test");
    const call: RecordedCall = {
      method: (init?.method ?? "GET").toUpperCase(),
      url: rawUrl,
      path: url.pathname,
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
      headers: Object.fromEntries(
        Object.entries((init?.headers ?? {}) as Record<string, string>),
      ),
    };
    calls.push(call);
    const route = table[`${call.method} ${url.pathname}`];
    const reply = route?.(url, call);
    if (!reply) {
      return Promise.reject(
        new TypeError(`no fixture route for ${call.method} ${url.pathname}`),
      );
    }
    return Promise.resolve(
      new Response(JSON.stringify(reply.body), {
        status: reply.status ?? 200,
        headers: { "content-type": "application/json" },
      }),
    );
  };
  return { fetchFn, calls };
}

/** A fetch double whose every call fails as if the service were down. */
export function downFetch(): { fetchFn: FetchLike; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  const fetchFn: FetchLike = (rawUrl, init) => {
    calls.push({
      method: (init?.method ?? "GET").toUpperCase(),
      url: rawUrl,
      path: new URL(rawUrl, "http://fixture.test").pathname,
      body: undefined,
      headers: {},
    });
    return Promise.reject(new TypeError("fetch failed: connection refused"));
  };
  return { fetchFn, calls };
}
