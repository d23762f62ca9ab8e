/** Browser entry point: configuration, polling, and event wiring. */

import { ApiClient } from "./api.js";
import { ReviewStore } from "./state.js";
import { renderApp } from "./ui.js";
import { DEFAULT_CONFIG, type AppConfig } from "./types.js";

async function loadConfig(): Promise<AppConfig> {
  try {
    const res = await fetch("./config.json", { cache: "no-store" });
    if (res.ok) {
      return { ...DEFAULT_CONFIG, ...((await res.json()) as Partial<AppConfig>) };
    }
  } catch {
    // fall through to defaults
  }
  return { ...DEFAULT_CONFIG };
}

function isEditing(root: HTMLElement): boolean {
  const active = document.activeElement;
  return (
    active instanceof HTMLElement &&
    root.contains(active) &&
    active.matches("input[type=text], select")
  );
}

function viewOf(store: ReviewStore) {
  const { pending, resolved } = store.partition();
  return {
    pending,
    resolved,
    status: store.status,
    connectionError: store.connectionError,
    retrainMessage: store.retrainMessage,
    bump: store.lastVersionBump,
    stale: store.isStale(),
    threshold: store.ratingThreshold(),
    drafts: (id: string) => store.draftFor(id),
    errors: (id: string) => store.cardErrors.get(id) ?? null,
    now: new Date(),
  };
}

function wire(root: HTMLElement, store: ReviewStore): () => void {
  const render = () => {
    root.innerHTML = renderApp(viewOf(store));
  };

  root.addEventListener("input", (event) => {
    const el = event.target;
    if (!(el instanceof HTMLInputElement)) return;
    const id = el.dataset["id"];
    if (id && el.dataset["field"] === "correction") {
      // Track keystrokes silently so a poll re-render cannot lose them.
      store.setDraft(id, { correction: el.value });
    }
  });

  root.addEventListener("change", (event) => {
    const el = event.target;
    if (!(el instanceof HTMLInputElement || el instanceof HTMLSelectElement)) {
      return;
    }
    const id = el.dataset["id"];
    if (!id) return;
    const field = el.dataset["field"];
    if (field === "verdict" && (el.value === "accept" || el.value === "reject")) {
      store.setDraft(id, { verdict: el.value });
      render();
    } else if (field === "rating") {
      const rating = Number.parseInt(el.value, 10);
      store.setDraft(id, { rating: Number.isNaN(rating) ? null : rating });
    }
  });

  root.addEventListener("click", (event) => {
    const el = event.target;
    if (!(el instanceof HTMLElement)) return;
    const action = el.dataset["action"];
    if (action === "resolve" && el.dataset["id"]) {
      const id = el.dataset["id"];
      void store.resolve(id).then(render);
    } else if (action === "retrain") {
      void store.retrain().then(render);
    }
  });

  return render;
}

async function main(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  const config = await loadConfig();
  const api = new ApiClient(config.apiBase, config.token ?? null);
  const store = new ReviewStore(api);
  const render = wire(root, store);

  await store.refresh();
  render();

  setInterval(() => {
    void store.refresh().then(() => {
      // Skip the repaint while the reviewer is mid-keystroke; drafts are
      // already tracked, so the next tick catches the view up.
      if (!isEditing(root)) {
        render();
      }
    });
  }, config.pollMs);
}

void main();
