"""Recommendation service: alarms in, ranked repair actions out.

The service persists cleaned alarm streams, serves top-k repair
recommendations for a turbine's current memory window, records
accept/reject/correct feedback from the reviewing manager, and retrains
incrementally once enough corrections accumulate or the rolling accept
rate drops. A retrained model only replaces the serving model if it does
at least as well on the held-out validation split; the swap is atomic
and bumps the model version.

Storage is sqlite behind a small interface so it can be swapped out.
Time handling is deliberately data-driven: the "current" window for a
turbine is anchored at its latest alarm timestamp rather than the wall
clock, which keeps replayed and synthetic streams meaningful.
"""

import json
import logging
import sqlite3
import threading
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .errors import (
    AlreadyResolved,
    InsufficientData,
    MissingCorrection,
    NoAlarmsInWindow,
    NoModelLoaded,
    RetrainInProgress,
    UnknownRecommendation,
)
from .ingest import CleaningConfig, clean_text, parse_timestamp
from .markov import TransitionModel, load_markov, predict_next
from .rnn import ModelConfig, ModelParams
from .sequencer import PairedDocument, pad_tokens, read_dataset, split_from_file
from .trainer import (
    TrainerConfig,
    encode_documents,
    evaluate,
    load_model,
    predict_topk_labels,
    save_model,
    train,
)
from .vocab import Vocabulary, load_vocab

logger = logging.getLogger(__name__)

ROLLING_WINDOW = 50
STATUSES = ("pending", "accepted", "rejected", "corrected")


@dataclass(frozen=True)
class RetrainPolicy:
    rating_threshold: int = 3
    min_new_examples: int = 10
    acceptance_target: float = 0.7

    def __post_init__(self):
        if not 1 <= self.rating_threshold <= 5:
            raise ValueError("rating_threshold must be in [1, 5]")
        if self.min_new_examples < 1:
            raise ValueError("min_new_examples must be >= 1")
        if not 0.0 <= self.acceptance_target <= 1.0:
            raise ValueError("acceptance_target must be in [0, 1]")


@dataclass(frozen=True)
class ServiceConfig:
    db_path: str = "service.db"
    model_path: str = "model.ckpt"
    vocab_path: str = "vocab.json"
    dataset_path: str = "dataset.jsonl"
    split_path: str = "split.json"
    markov_path: str | None = None
    static_dir: str | None = None
    host: str = "127.0.0.1"
    port: int = 8000
    token: str | None = None
    mem_days: int = 20
    target_len: int = 75
    default_k: int = 3
    policy: RetrainPolicy = field(default_factory=RetrainPolicy)
    retrain: TrainerConfig = field(default_factory=TrainerConfig)


_ENV_PREFIX = "ALARM2ACTION_"


def load_service_config(path=None, env: dict | None = None) -> ServiceConfig:
    """Build configuration from an optional JSON file plus env overrides.

    Environment variables use the config field name uppercased with an
    ``ALARM2ACTION_`` prefix (e.g. ``ALARM2ACTION_PORT``); policy and
    retrain fields are flattened (``ALARM2ACTION_RATING_THRESHOLD``).
    """
    import os

    env = dict(os.environ if env is None else env)
    data: dict = {}
    if path is not None:
        data = json.loads(Path(path).read_text(encoding="utf-8"))

    policy_data = dict(data.pop("policy", {}))
    retrain_data = dict(data.pop("retrain", {}))

    def override(target: dict, fields: dict):
        for name, cast in fields.items():
            raw = env.get(_ENV_PREFIX + name.upper())
            if raw is not None:
                target[name] = cast(raw)

    top_fields = {
        "db_path": str, "model_path": str, "vocab_path": str,
        "dataset_path": str, "split_path": str, "markov_path": str,
        "static_dir": str, "host": str, "port": int, "token": str,
        "mem_days": int, "target_len": int, "default_k": int,
    }
    override(data, top_fields)
    override(policy_data, {"rating_threshold": int, "min_new_examples": int,
                           "acceptance_target": float})
    override(retrain_data, {"epochs": int, "batch_size": int,
                            "learning_rate": float, "clip_threshold": float,
                            "seed": int})
    return ServiceConfig(
        **data,
        policy=RetrainPolicy(**policy_data),
        retrain=TrainerConfig(**retrain_data),
    )


class SqliteStorage:
    """Embedded transactional store for alarms, recommendations, feedback."""

    def __init__(self, path: str = ":memory:"):
        self._conn = sqlite3.connect(path, check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._lock = threading.Lock()
        self._create_tables()

    def _create_tables(self):
        with self._lock, self._conn:
            self._conn.executescript("""
                CREATE TABLE IF NOT EXISTS alarms (
                    turbine_id TEXT NOT NULL,
                    time_on TEXT NOT NULL,
                    text TEXT NOT NULL
                );
                CREATE INDEX IF NOT EXISTS idx_alarms
                    ON alarms (turbine_id, time_on);
                CREATE TABLE IF NOT EXISTS recommendations (
                    id TEXT PRIMARY KEY,
                    turbine_id TEXT NOT NULL,
                    created_at TEXT NOT NULL,
                    alarm_window TEXT NOT NULL,
                    ranked TEXT NOT NULL,
                    markov_next TEXT,
                    status TEXT NOT NULL,
                    model_version INTEGER NOT NULL
                );
                CREATE TABLE IF NOT EXISTS feedback (
                    seq INTEGER PRIMARY KEY AUTOINCREMENT,
                    recommendation_id TEXT NOT NULL,
                    rating INTEGER NOT NULL,
                    verdict TEXT NOT NULL,
                    corrected_label TEXT,
                    actor TEXT NOT NULL,
                    at TEXT NOT NULL
                );
                CREATE TABLE IF NOT EXISTS buffer (
                    seq INTEGER PRIMARY KEY AUTOINCREMENT,
                    turbine_id TEXT NOT NULL,
                    tokens TEXT NOT NULL,
                    label TEXT NOT NULL,
                    added_at TEXT NOT NULL
                );
                CREATE TABLE IF NOT EXISTS kv (
                    key TEXT PRIMARY KEY,
                    value TEXT NOT NULL
                );
            """)

    def close(self):
        self._conn.close()

    # -- alarms ---------------------------------------------------------

    def add_alarm(self, turbine_id: str, time_iso: str, text: str) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO alarms (turbine_id, time_on, text) VALUES (?,?,?)",
                (turbine_id, time_iso, text),
            )

    def last_same_text_time(self, turbine_id: str, text: str) -> str | None:
        cur = self._conn.execute(
            "SELECT MAX(time_on) FROM alarms WHERE turbine_id=? AND text=?",
            (turbine_id, text),
        )
        return cur.fetchone()[0]

    def latest_alarm_time(self, turbine_id: str) -> str | None:
        cur = self._conn.execute(
            "SELECT MAX(time_on) FROM alarms WHERE turbine_id=?", (turbine_id,)
        )
        return cur.fetchone()[0]

    def alarms_in_range(
        self, turbine_id: str, start_iso: str, end_iso: str
    ) -> list[tuple[str, str]]:
        cur = self._conn.execute(
            "SELECT time_on, text FROM alarms"
            " WHERE turbine_id=? AND time_on>=? AND time_on<=?"
            " ORDER BY time_on, rowid",
            (turbine_id, start_iso, end_iso),
        )
        return cur.fetchall()

    # -- recommendations -------------------------------------------------

    def add_recommendation(self, rec: dict) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO recommendations"
                " (id, turbine_id, created_at, alarm_window, ranked,"
                "  markov_next, status, model_version)"
                " VALUES (?,?,?,?,?,?,?,?)",
                (
                    rec["id"], rec["turbine_id"], rec["created_at"],
                    json.dumps(rec["alarm_window"]), json.dumps(rec["ranked"]),
                    json.dumps(rec["markov_next"]), rec["status"],
                    rec["model_version"],
                ),
            )

    @staticmethod
    def _rec_from_row(row) -> dict:
        return {
            "id": row[0],
            "turbine_id": row[1],
            "created_at": row[2],
            "alarm_window": json.loads(row[3]),
            "ranked": json.loads(row[4]),
            "markov_next": json.loads(row[5]),
            "status": row[6],
            "model_version": row[7],
        }

    def get_recommendation(self, rec_id: str) -> dict | None:
        cur = self._conn.execute(
            "SELECT id, turbine_id, created_at, alarm_window, ranked,"
            " markov_next, status, model_version"
            " FROM recommendations WHERE id=?",
            (rec_id,),
        )
        row = cur.fetchone()
        return self._rec_from_row(row) if row else None

    def list_recommendations(
        self, status: str | None = None, turbine_id: str | None = None,
        limit: int = 100,
    ) -> list[dict]:
        query = ("SELECT id, turbine_id, created_at, alarm_window, ranked,"
                 " markov_next, status, model_version FROM recommendations")
        clauses, args = [], []
        if status is not None:
            clauses.append("status=?")
            args.append(status)
        if turbine_id is not None:
            clauses.append("turbine_id=?")
            args.append(turbine_id)
        if clauses:
            query += " WHERE " + " AND ".join(clauses)
        query += " ORDER BY created_at DESC, rowid DESC LIMIT ?"
        args.append(limit)
        return [self._rec_from_row(r) for r in self._conn.execute(query, args)]

    def set_recommendation_status(self, rec_id: str, status: str) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "UPDATE recommendations SET status=? WHERE id=?", (status, rec_id)
            )

    # -- feedback ---------------------------------------------------------

    def add_feedback(self, fb: dict) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO feedback"
                " (recommendation_id, rating, verdict, corrected_label, actor, at)"
                " VALUES (?,?,?,?,?,?)",
                (fb["recommendation_id"], fb["rating"], fb["verdict"],
                 fb["corrected_label"], fb["actor"], fb["at"]),
            )

    def recent_verdicts(self, n: int = ROLLING_WINDOW) -> list[str]:
        cur = self._conn.execute(
            "SELECT verdict FROM feedback ORDER BY seq DESC LIMIT ?", (n,)
        )
        return [row[0] for row in cur.fetchall()]

    # -- incremental training buffer --------------------------------------

    def buffer_add(self, turbine_id: str, tokens: list[str], label: str,
                   added_at: str) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO buffer (turbine_id, tokens, label, added_at)"
                " VALUES (?,?,?,?)",
                (turbine_id, json.dumps(tokens), label, added_at),
            )

    def buffer_rows(self) -> list[tuple[int, str, list[str], str, str]]:
        cur = self._conn.execute(
            "SELECT seq, turbine_id, tokens, label, added_at"
            " FROM buffer ORDER BY seq"
        )
        return [(r[0], r[1], json.loads(r[2]), r[3], r[4]) for r in cur.fetchall()]

    def buffer_size(self) -> int:
        return self._conn.execute("SELECT COUNT(*) FROM buffer").fetchone()[0]

    def buffer_delete_upto(self, max_seq: int) -> None:
        with self._lock, self._conn:
            self._conn.execute("DELETE FROM buffer WHERE seq<=?", (max_seq,))

    # -- misc key/value ----------------------------------------------------

    def kv_get(self, key: str, default: str | None = None) -> str | None:
        cur = self._conn.execute("SELECT value FROM kv WHERE key=?", (key,))
        row = cur.fetchone()
        return row[0] if row else default

    def kv_set(self, key: str, value: str) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO kv (key, value) VALUES (?,?)"
                " ON CONFLICT(key) DO UPDATE SET value=excluded.value",
                (key, value),
            )


@dataclass
class _LoadedModel:
    params: ModelParams
    cfg: ModelConfig
    version: int


class RecommendationService:
    """Core behaviour behind the HTTP endpoints; usable directly in tests."""

    def __init__(
        self,
        storage: SqliteStorage,
        config: ServiceConfig,
        vocab: Vocabulary | None = None,
        params: ModelParams | None = None,
        model_cfg: ModelConfig | None = None,
        markov: TransitionModel | None = None,
        cleaning: CleaningConfig | None = None,
    ):
        self.storage = storage
        self.config = config
        self.cleaning = cleaning if cleaning is not None else CleaningConfig()
        self.vocab = vocab
        self.markov = markov
        self._model_lock = threading.Lock()
        self._retrain_lock = threading.Lock()
        self._model: _LoadedModel | None = None
        if params is not None and model_cfg is not None:
            version = int(self.storage.kv_get("model_version", "1"))
            self._model = _LoadedModel(params, model_cfg, version)
            self.storage.kv_set("model_version", str(version))

    @classmethod
    def from_config(cls, config: ServiceConfig) -> "RecommendationService":
        storage = SqliteStorage(config.db_path)
        vocab = None
        params = model_cfg = None
        markov = None
        if Path(config.vocab_path).exists():
            vocab = load_vocab(config.vocab_path)
        if vocab is not None and Path(config.model_path).exists():
            params, model_cfg, _ = load_model(
                config.model_path, expected_vocab_fingerprint=vocab.fingerprint()
            )
        if config.markov_path and Path(config.markov_path).exists():
            markov = load_markov(config.markov_path)
        return cls(storage, config, vocab=vocab, params=params,
                   model_cfg=model_cfg, markov=markov)

    # -- alarms -----------------------------------------------------------

    def submit_alarms(self, turbine_id: str, events: list[dict]) -> dict:
        """Clean, chatter-suppress and persist a batch of alarm events.

        Events are processed independently: a malformed event is reported
        by index without blocking the rest.
        """
        parsed = []
        errors = []
        for idx, ev in enumerate(events):
            try:
                when = parse_timestamp(str(ev["time_on"]))
                text = clean_text(str(ev["text"]), self.cleaning)
                if not text:
                    raise ValueError("text empty after cleaning")
                parsed.append((idx, when, text))
            except (KeyError, TypeError, ValueError) as exc:
                errors.append({"index": idx, "error": str(exc)})

        parsed.sort(key=lambda item: item[1])
        accepted = 0
        suppressed = 0
        window = self.cleaning.chatter_window_s
        for _idx, when, text in parsed:
            last = self.storage.last_same_text_time(turbine_id, text)
            if last is not None:
                gap = (when - parse_timestamp(last)).total_seconds()
                if 0 <= gap <= window:
                    suppressed += 1
                    continue
            self.storage.add_alarm(turbine_id, when.isoformat(), text)
            accepted += 1
        return {"accepted": accepted, "suppressed": suppressed, "errors": errors}

    # -- recommendations ----------------------------------------------------

    def _current_model(self) -> _LoadedModel:
        with self._model_lock:
            model = self._model
        if model is None or self.vocab is None:
            raise NoModelLoaded("no trained model is loaded")
        return model

    def get_recommendations(self, turbine_id: str, k: int | None = None) -> list[dict]:
        """Build the turbine's current window, predict, persist, return."""
        model = self._current_model()
        k = self.config.default_k if k is None else k
        if k < 1:
            raise ValueError("k must be >= 1")

        latest_iso = self.storage.latest_alarm_time(turbine_id)
        if latest_iso is None:
            raise NoAlarmsInWindow(f"no alarms stored for turbine {turbine_id}")
        latest = parse_timestamp(latest_iso)
        start = latest - timedelta(days=self.config.mem_days)
        rows = self.storage.alarms_in_range(
            turbine_id, start.isoformat(), latest.isoformat()
        )
        if not rows:
            raise NoAlarmsInWindow(f"no alarms in window for turbine {turbine_id}")

        tokens = [text for _t, text in rows]
        ranked = predict_topk_labels(
            model.params, model.cfg, tokens, self.vocab,
            k=min(k, model.cfg.num_classes),
        )
        markov_next = None
        if self.markov is not None:
            last_text = tokens[-1]
            if last_text in self.markov.state_index:
                markov_next = [
                    [alarm, prob]
                    for alarm, prob in predict_next(self.markov, last_text, k=3)
                ]

        rec = {
            "id": uuid.uuid4().hex,
            "turbine_id": turbine_id,
            "created_at": latest.isoformat(),
            "alarm_window": [{"time_on": t, "text": text} for t, text in rows],
            "ranked": [[label, prob] for label, prob in ranked],
            "markov_next": markov_next,
            "status": "pending",
            "model_version": model.version,
        }
        self.storage.add_recommendation(rec)
        return [rec]

    # -- feedback -----------------------------------------------------------

    def submit_feedback(
        self,
        recommendation_id: str,
        rating: int,
        verdict: str,
        corrected_label: str | None = None,
        actor: str = "unknown",
    ) -> dict:
        if not 1 <= rating <= 5:
            raise ValueError("rating must be in [1, 5]")
        if verdict not in ("accept", "reject"):
            raise ValueError("verdict must be 'accept' or 'reject'")
        if verdict == "accept" and corrected_label is not None:
            raise ValueError("corrected_label only applies to rejections")
        if (corrected_label is not None and self.vocab is not None
                and corrected_label not in self.vocab.labels):
            raise ValueError(f"unknown repair label {corrected_label!r}")

        rec = self.storage.get_recommendation(recommendation_id)
        if rec is None:
            raise UnknownRecommendation(recommendation_id)
        if rec["status"] != "pending":
            raise AlreadyResolved(
                f"recommendation {recommendation_id} is {rec['status']}"
            )

        needs_correction = (verdict == "reject"
                            and rating < self.config.policy.rating_threshold)
        if needs_correction and corrected_label is None:
            raise MissingCorrection(
                "low-rated rejection requires the correct repair action"
            )

        if verdict == "accept":
            new_status = "accepted"
        elif corrected_label is not None:
            new_status = "corrected"
        else:
            new_status = "rejected"

        now_iso = datetime.now(timezone.utc).isoformat()
        record = {
            "recommendation_id": recommendation_id,
            "rating": rating,
            "verdict": verdict,
            "corrected_label": corrected_label,
            "actor": actor,
            "at": now_iso,
        }
        self.storage.add_feedback(record)
        self.storage.set_recommendation_status(recommendation_id, new_status)
        if corrected_label is not None:
            tokens = [ev["text"] for ev in rec["alarm_window"]]
            self.storage.buffer_add(rec["turbine_id"], tokens,
                                    corrected_label, now_iso)
        rec["status"] = new_status
        # Echo the recorded feedback so review clients can display exactly
        # what was stored instead of reconstructing it from the request.
        rec["feedback"] = record
        return rec

    # -- retraining -----------------------------------------------------------

    def accept_rate(self) -> float | None:
        verdicts = self.storage.recent_verdicts(ROLLING_WINDOW)
        if not verdicts:
            return None
        accepted = sum(1 for v in verdicts if v == "accept")
        return accepted / len(verdicts)

    def retrain_state(self) -> str:
        return "training" if self._retrain_lock.locked() else "idle"

    def status(self) -> dict:
        with self._model_lock:
            model = self._model
        last_retrain = self.storage.kv_get("last_retrain")
        return {
            "model_version": model.version if model else None,
            "model_loaded": model is not None,
            "bidirectional": model.cfg.bidirectional if model else None,
            "num_classes": model.cfg.num_classes if model else None,
            "labels": list(self.vocab.labels) if self.vocab else [],
            "accept_rate": self.accept_rate(),
            "buffer_size": self.storage.buffer_size(),
            "training_state": self.retrain_state(),
            "last_retrain": json.loads(last_retrain) if last_retrain else None,
            "policy": {
                "rating_threshold": self.config.policy.rating_threshold,
                "min_new_examples": self.config.policy.min_new_examples,
                "acceptance_target": self.config.policy.acceptance_target,
            },
        }

    def _buffer_documents(self) -> tuple[list[PairedDocument], int]:
        rows = self.storage.buffer_rows()
        docs = []
        max_seq = 0
        for seq, turbine_id, tokens, label, added_at in rows:
            padded = pad_tokens(tokens, self.config.target_len)
            docs.append(PairedDocument(
                turbine_id=turbine_id,
                response_time=parse_timestamp(added_at),
                label=label,
                alarm_tokens=tuple(padded),
            ))
            max_seq = max(max_seq, seq)
        return docs, max_seq

    def trigger_retrain(self, wait: bool = False) -> dict:
        """Start a retraining job if policy preconditions hold.

        A candidate model replaces the serving one only when its accuracy
        on the original validation split is at least the serving model's;
        the correction buffer is drained exactly once, on success.
        """
        policy = self.config.policy
        buffer_size = self.storage.buffer_size()
        rate = self.accept_rate()
        buffer_ready = buffer_size >= policy.min_new_examples
        rate_low = rate is not None and rate < policy.acceptance_target
        if not buffer_ready and not rate_low:
            raise InsufficientData(
                f"buffer {buffer_size} < {policy.min_new_examples} and "
                f"accept rate {rate} not below {policy.acceptance_target}"
            )
        if not self._retrain_lock.acquire(blocking=False):
            raise RetrainInProgress("a retraining job is already running")

        def job():
            try:
                outcome = self._run_retrain()
                self.storage.kv_set("last_retrain", json.dumps(outcome))
            except Exception as exc:  # noqa: BLE001 - job boundary
                logger.exception("retraining failed")
                self.storage.kv_set(
                    "last_retrain",
                    json.dumps({"outcome": "error", "error": str(exc)}),
                )
            finally:
                self._retrain_lock.release()

        if wait:
            job()
        else:
            threading.Thread(target=job, name="retrain", daemon=True).start()
        return {
            "started": True,
            "buffer_size": buffer_size,
            "accept_rate": rate,
            "training_state": self.retrain_state(),
        }

    def _run_retrain(self) -> dict:
        model = self._current_model()
        docs = read_dataset(self.config.dataset_path)
        split = split_from_file(self.config.split_path, docs)
        buffer_docs, max_seq = self._buffer_documents()

        train_docs = list(split.train) + buffer_docs
        train_set = encode_documents(train_docs, self.vocab)
        val_set = encode_documents(split.validation, self.vocab)

        seed = self.config.retrain.seed + model.version
        tcfg = replace(self.config.retrain, seed=seed)
        result = train(train_set, val_set if len(val_set) else None,
                       model.cfg, tcfg)

        if len(val_set):
            old_acc = evaluate(model.params, model.cfg, val_set).accuracy
            new_acc = evaluate(result.best_params, model.cfg, val_set).accuracy
        else:
            old_acc, new_acc = 0.0, result.history[-1].train_acc

        outcome = {
            "seed": seed,
            "buffer_examples": len(buffer_docs),
            "old_val_acc": old_acc,
            "new_val_acc": new_acc,
        }
        if new_acc >= old_acc:
            with self._model_lock:
                new_version = model.version + 1
                self._model = _LoadedModel(result.best_params, model.cfg,
                                           new_version)
            self.storage.kv_set("model_version", str(new_version))
            if max_seq:
                self.storage.buffer_delete_upto(max_seq)
            save_model(self.config.model_path, result.best_params, model.cfg,
                       self.vocab.fingerprint(),
                       extra={"retrained": True, "seed": seed,
                              "version": new_version})
            outcome.update({"outcome": "swapped", "model_version": new_version})
        else:
            outcome.update({"outcome": "retained",
                            "model_version": model.version})
        return outcome


def create_app(service: RecommendationService):
    """Wire the service into a FastAPI application."""
    from fastapi import Depends, FastAPI, HTTPException, Query, Request
    from fastapi.responses import RedirectResponse
    from pydantic import BaseModel, Field

    class AlarmIn(BaseModel):
        time_on: str
        text: str

    class AlarmBatchIn(BaseModel):
        events: list[AlarmIn]

    class FeedbackIn(BaseModel):
        recommendation_id: str
        rating: int = Field(ge=1, le=5)
        verdict: str
        corrected_label: str | None = None
        actor: str = "unknown"

    def check_token(request: Request):
        # The token guards the API; the static review page stays reachable
        # (it carries no data and fetches everything through /api/v1).
        if not request.url.path.startswith("/api/"):
            return
        expected = service.config.token
        if expected and request.headers.get("x-auth-token") != expected:
            raise HTTPException(status_code=401, detail="invalid token")

    app = FastAPI(title="alarm2action", dependencies=[Depends(check_token)])

    @app.post("/api/v1/turbines/{turbine_id}/alarms")
    def post_alarms(turbine_id: str, batch: AlarmBatchIn):
        return service.submit_alarms(
            turbine_id, [ev.model_dump() for ev in batch.events]
        )

    @app.get("/api/v1/turbines/{turbine_id}/recommendations")
    def get_recommendations(turbine_id: str, k: int = Query(default=None, ge=1)):
        try:
            return service.get_recommendations(turbine_id, k)
        except NoModelLoaded as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        except NoAlarmsInWindow as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc

    @app.get("/api/v1/recommendations")
    def list_recommendations(
        status: str | None = Query(default=None),
        turbine_id: str | None = Query(default=None),
        limit: int = Query(default=100, ge=1, le=1000),
    ):
        if status is not None and status not in STATUSES:
            raise HTTPException(status_code=422, detail=f"bad status {status!r}")
        return service.storage.list_recommendations(status, turbine_id, limit)

    @app.post("/api/v1/feedback")
    def post_feedback(fb: FeedbackIn):
        try:
            return service.submit_feedback(
                recommendation_id=fb.recommendation_id,
                rating=fb.rating,
                verdict=fb.verdict,
                corrected_label=fb.corrected_label,
                actor=fb.actor,
            )
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except UnknownRecommendation as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except AlreadyResolved as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except MissingCorrection as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    @app.post("/api/v1/retrain")
    def post_retrain(wait: bool = Query(default=False)):
        try:
            return service.trigger_retrain(wait=wait)
        except InsufficientData as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except RetrainInProgress as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc

    @app.get("/api/v1/status")
    def get_status():
        return service.status()

    static_dir = service.config.static_dir
    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        index = Path(static_dir) / "index.html"
        if index.exists():
            # Redirect instead of serving the file here so the page's
            # relative asset links resolve inside the /ui mount.
            @app.get("/", include_in_schema=False)
            def root():
                return RedirectResponse("/ui/")

        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
