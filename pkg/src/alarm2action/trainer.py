"""Training loop, evaluation and checkpointing for the recurrent classifier.

Training is deterministic for a given seed: parameter initialization and
epoch shuffling use two independent RNG streams derived from the seed, so
two models trained with the same seed see identical example order even if
their parameter shapes differ (e.g. one directional, one bidirectional).
Batch gradients are averaged in a fixed summation order.
"""

from __future__ import annotations

import hashlib
import json
import logging
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CorruptCheckpoint,
    DivergenceDetected,
    EmptyDataset,
    EmptyTrainingSet,
    NonFiniteGradient,
    ShapeMismatch,
    VocabularyHashMismatch,
)
from .rnn import (
    AdamState,
    CellWeights,
    ModelConfig,
    ModelParams,
    adam_step,
    backward,
    clip_gradients,
    copy_params,
    forward,
    init_adam,
    init_params,
    loss,
    tree_map,
    validate_params,
)

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "alarm2action-model-v1"
HISTORY_HEADER = "epoch,train_loss,train_acc,val_acc"


@dataclass(frozen=True)
class TrainerConfig:
    epochs: int = 50
    batch_size: int = 16
    learning_rate: float = 0.01
    clip_threshold: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.clip_threshold <= 0:
            raise ValueError("clip_threshold must be > 0")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "clip_threshold": self.clip_threshold,
            "seed": self.seed,
        }


@dataclass
class EncodedDataset:
    """Fixed-length token-id rows with one label per row."""

    inputs: np.ndarray  # [N, T] int64
    labels: np.ndarray  # [N] int64

    def __len__(self) -> int:
        return self.inputs.shape[0]


def encode_documents(docs, vocab) -> EncodedDataset:
    """Encode padded documents to an id matrix; rows must share one length."""
    from .vocab import encode_document

    rows, labels = [], []
    length = None
    for doc in docs:
        ids, label_id = encode_document(doc, vocab)
        if length is None:
            length = len(ids)
        elif len(ids) != length:
            raise ShapeMismatch(
                f"document length {len(ids)} != {length}; pad documents first"
            )
        rows.append(ids)
        labels.append(label_id)
    if not rows:
        return EncodedDataset(
            inputs=np.zeros((0, 0), dtype=np.int64),
            labels=np.zeros(0, dtype=np.int64),
        )
    return EncodedDataset(
        inputs=np.array(rows, dtype=np.int64),
        labels=np.array(labels, dtype=np.int64),
    )


def dataset_fingerprint(*datasets: EncodedDataset) -> str:
    """Order-sensitive digest of the exact arrays a training run consumes."""
    digest = hashlib.sha256()
    for ds in datasets:
        digest.update(str(ds.inputs.shape).encode())
        digest.update(np.ascontiguousarray(ds.inputs).tobytes())
        digest.update(np.ascontiguousarray(ds.labels).tobytes())
    return digest.hexdigest()


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_acc: float


@dataclass
class EvalReport:
    """Counts-first evaluation summary.

    ``accuracy`` is None (undefined, not 0%) when nothing was evaluated.
    Confusion rows are true labels, columns predicted labels. Per-class
    precision/recall are None where the denominator is zero.
    """

    correct: int
    incorrect: int
    accuracy: float | None
    mean_loss: float | None
    confusion: np.ndarray                       # [C, C] int64
    precision: list[float | None]
    recall: list[float | None]
    predictions: np.ndarray                     # [N] argmax label ids

    @property
    def total(self) -> int:
        return self.correct + self.incorrect

    def to_dict(self, labels: list[str] | None = None) -> dict:
        names = labels if labels is not None else [
            str(i) for i in range(self.confusion.shape[0])
        ]
        return {
            "examples": self.total,
            "correct": self.correct,
            "incorrect": self.incorrect,
            "accuracy": self.accuracy,
            "mean_loss": self.mean_loss,
            "labels": names,
            "confusion": self.confusion.tolist(),
            "precision": self.precision,
            "recall": self.recall,
        }


@dataclass
class TrainResult:
    final_params: ModelParams
    best_params: ModelParams
    best_epoch: int
    best_val_acc: float
    history: list[EpochStats] = field(default_factory=list)
    model_cfg: ModelConfig | None = None
    trainer_cfg: TrainerConfig | None = None
    data_fingerprint: str = ""
    adam: AdamState | None = None


def evaluate(params: ModelParams, cfg: ModelConfig, ds: EncodedDataset) -> EvalReport:
    """Argmax accuracy, confusion counts and per-class precision/recall."""
    c = cfg.num_classes
    confusion = np.zeros((c, c), dtype=np.int64)
    preds = np.empty(len(ds), dtype=np.int64)
    total_loss = 0.0
    for n in range(len(ds)):
        probs, _ = forward(params, cfg, ds.inputs[n])
        label = int(ds.labels[n])
        total_loss += loss(probs, label)
        pred = int(np.argmax(probs))
        preds[n] = pred
        confusion[label, pred] += 1

    correct = int(np.trace(confusion))
    incorrect = int(confusion.sum()) - correct
    n_total = correct + incorrect
    col_sums = confusion.sum(axis=0)
    row_sums = confusion.sum(axis=1)
    precision = [
        float(confusion[j, j] / col_sums[j]) if col_sums[j] else None
        for j in range(c)
    ]
    recall = [
        float(confusion[j, j] / row_sums[j]) if row_sums[j] else None
        for j in range(c)
    ]
    return EvalReport(
        correct=correct,
        incorrect=incorrect,
        accuracy=correct / n_total if n_total else None,
        mean_loss=total_loss / n_total if n_total else None,
        confusion=confusion,
        precision=precision,
        recall=recall,
        predictions=preds,
    )


def predict_topk(
    params: ModelParams, cfg: ModelConfig, token_ids, k: int
) -> list[tuple[int, float]]:
    """Top-k (label_id, probability), ordered by probability then label id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    probs, _ = forward(params, cfg, token_ids)
    order = sorted(range(probs.shape[0]), key=lambda j: (-probs[j], j))
    return [(j, float(probs[j])) for j in order[:k]]


def prepare_ids(tokens: list[str], vocab, seq_len: int) -> np.ndarray:
    """Encode raw tokens to a fixed-length id row (left-pad / keep newest)."""
    from .vocab import PAD_INDEX, encode_tokens

    ids = encode_tokens(tokens, vocab)
    if len(ids) >= seq_len:
        ids = ids[len(ids) - seq_len:]
    else:
        ids = [PAD_INDEX] * (seq_len - len(ids)) + ids
    return np.asarray(ids, dtype=np.int64)


def predict_topk_labels(
    params: ModelParams, cfg: ModelConfig, tokens: list[str], vocab, k: int
) -> list[tuple[str, float]]:
    """Top-k predictions for a raw token window, with label strings."""
    ids = prepare_ids(tokens, vocab, cfg.seq_len)
    return [(vocab.labels[j], p) for j, p in predict_topk(params, cfg, ids, k)]


def train_on_split(
    split,
    vocab,
    model_cfg: ModelConfig,
    trainer_cfg: TrainerConfig,
    embedding: np.ndarray | None = None,
    callback=None,
) -> tuple[TrainResult, EncodedDataset, EncodedDataset, EncodedDataset]:
    """Encode a train/validation/test split and train on it."""
    train_set = encode_documents(split.train, vocab)
    val_set = encode_documents(split.validation, vocab)
    test_set = encode_documents(split.test, vocab)
    result = train(
        train_set,
        val_set if len(val_set) else None,
        model_cfg,
        trainer_cfg,
        embedding=embedding,
        callback=callback,
    )
    return result, train_set, val_set, test_set


def majority_baseline(train_labels: np.ndarray, eval_labels: np.ndarray) -> float:
    """Accuracy of always predicting the most frequent training label."""
    if train_labels.size == 0 or eval_labels.size == 0:
        raise EmptyDataset("majority baseline needs non-empty label arrays")
    counts = np.bincount(train_labels.astype(np.int64))
    majority = int(np.argmax(counts))
    return float(np.mean(eval_labels == majority))


def train(
    train_set: EncodedDataset,
    val_set: EncodedDataset | None,
    model_cfg: ModelConfig,
    trainer_cfg: TrainerConfig,
    embedding: np.ndarray | None = None,
    initial_params: ModelParams | None = None,
    callback=None,
) -> TrainResult:
    """Run the full training schedule and return final and best parameters.

    ``best`` is the epoch with the highest validation accuracy (earliest
    wins ties); without a validation set it is simply the final epoch.
    Validation examples never touch the gradient path, so two runs that
    differ only in ``val_set`` produce identical parameters. Non-finite
    training loss or parameters abort the run with the last finite
    parameters attached to the exception.
    """
    if len(train_set) == 0:
        raise EmptyTrainingSet("training set is empty")
    have_val = val_set is not None and len(val_set) > 0

    rng_params = np.random.default_rng([trainer_cfg.seed, 0])
    rng_shuffle = np.random.default_rng([trainer_cfg.seed, 1])

    if initial_params is None:
        params = init_params(model_cfg, rng_params, embedding=embedding)
    else:
        params = copy_params(initial_params)
    adam = init_adam(params)

    fingerprint = (dataset_fingerprint(train_set, val_set) if have_val
                   else dataset_fingerprint(train_set))
    history: list[EpochStats] = []
    best_params = copy_params(params)
    best_epoch = 0
    best_val_acc = -1.0
    last_good = copy_params(params)

    n = len(train_set)
    for epoch in range(1, trainer_cfg.epochs + 1):
        order = np.arange(n)
        rng_shuffle.shuffle(order)

        epoch_loss = 0.0
        epoch_correct = 0
        try:
            for start in range(0, n, trainer_cfg.batch_size):
                batch = order[start:start + trainer_cfg.batch_size]
                grad_sum = None
                for idx in batch:
                    probs, cache = forward(params, model_cfg, train_set.inputs[idx])
                    label = int(train_set.labels[idx])
                    epoch_loss += loss(probs, label)
                    epoch_correct += int(np.argmax(probs)) == label
                    grads = backward(params, model_cfg, cache, label)
                    if grad_sum is None:
                        grad_sum = grads
                    else:
                        grad_sum = tree_map(lambda a, b: a + b, grad_sum, grads)
                grad_avg = tree_map(lambda a: a / len(batch), grad_sum)
                clipped = clip_gradients(grad_avg, trainer_cfg.clip_threshold)
                params, adam = adam_step(params, clipped, adam, trainer_cfg.learning_rate)
        except NonFiniteGradient:
            # NaN probabilities poison the gradients before the epoch-end
            # loss check can see them; fold that path into the same abort.
            raise DivergenceDetected(epoch, last_good, history) from None

        train_loss = epoch_loss / n
        train_acc = epoch_correct / n
        if not np.isfinite(train_loss) or not params.all_finite():
            raise DivergenceDetected(epoch, last_good, history)
        last_good = copy_params(params)

        if have_val:
            val_acc = evaluate(params, model_cfg, val_set).accuracy
        else:
            val_acc = float("nan")
        stats = EpochStats(
            epoch=epoch,
            train_loss=float(train_loss),
            train_acc=float(train_acc),
            val_acc=float(val_acc),
        )
        history.append(stats)
        if have_val and val_acc > best_val_acc:
            best_val_acc = val_acc
            best_epoch = epoch
            best_params = copy_params(params)
        if callback is not None:
            callback(stats)

    if not have_val:
        best_params = copy_params(params)
        best_epoch = trainer_cfg.epochs
        best_val_acc = float("nan")
    return TrainResult(
        final_params=params,
        best_params=best_params,
        best_epoch=best_epoch,
        best_val_acc=best_val_acc,
        history=history,
        model_cfg=model_cfg,
        trainer_cfg=trainer_cfg,
        data_fingerprint=fingerprint,
        adam=adam,
    )


def write_history(path, history: list[EpochStats]) -> None:
    lines = [HISTORY_HEADER]
    for s in history:
        lines.append(
            f"{s.epoch},{s.train_loss:.10g},{s.train_acc:.10g},{s.val_acc:.10g}"
        )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_history(path) -> list[EpochStats]:
    text = Path(path).read_text(encoding="utf-8").strip()
    lines = text.splitlines()
    if not lines or lines[0] != HISTORY_HEADER:
        raise CorruptCheckpoint(f"unexpected history header in {path}")
    out = []
    for line in lines[1:]:
        epoch, tl, ta, va = line.split(",")
        out.append(EpochStats(int(epoch), float(tl), float(ta), float(va)))
    return out


def save_model(
    path,
    params: ModelParams,
    cfg: ModelConfig,
    vocab_fingerprint: str,
    extra: dict | None = None,
    adam: AdamState | None = None,
) -> None:
    """Persist parameters to a single .npz with a JSON metadata block.

    When an optimizer state is supplied its moment tensors are stored too,
    making the checkpoint resumable.
    """
    meta = {
        "format": CHECKPOINT_FORMAT,
        "model": cfg.to_dict(),
        "vocab_fingerprint": vocab_fingerprint,
        "extra": extra or {},
    }
    tensors = {name.replace(".", "_"): arr for name, arr in params.named_tensors()}
    if adam is not None:
        meta["adam"] = {"t": adam.t, "beta1": adam.beta1,
                        "beta2": adam.beta2, "eps": adam.eps}
        for name, arr in adam.m.named_tensors():
            tensors["adam_m_" + name.replace(".", "_")] = arr
        for name, arr in adam.v.named_tensors():
            tensors["adam_v_" + name.replace(".", "_")] = arr
    tensors["meta"] = np.array(json.dumps(meta, sort_keys=True))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, **tensors)


def load_model(
    path, expected_vocab_fingerprint: str | None = None
) -> tuple[ModelParams, ModelConfig, dict]:
    """Load a checkpoint; verify format and, if given, the vocabulary hash."""
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError, zipfile.BadZipFile, EOFError) as exc:
        raise CorruptCheckpoint(f"cannot read checkpoint {path}: {exc}") from exc
    with archive:
        names = set(archive.files)
        if "meta" not in names:
            raise CorruptCheckpoint(f"checkpoint {path} has no metadata block")
        try:
            meta = json.loads(str(archive["meta"]))
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise CorruptCheckpoint(f"unreadable metadata in {path}") from exc
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise CorruptCheckpoint(
                f"unsupported checkpoint format {meta.get('format')!r}"
            )
        try:
            cfg = ModelConfig.from_dict(meta["model"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptCheckpoint(f"bad model config in {path}") from exc

        required = {"embedding", "fwd_w_x", "fwd_w_h", "fwd_bias",
                    "dense_w", "dense_b"}
        if cfg.bidirectional:
            required |= {"bwd_w_x", "bwd_w_h", "bwd_bias"}
        missing = required - names
        if missing:
            raise CorruptCheckpoint(
                f"checkpoint {path} missing tensors: {sorted(missing)}"
            )

        stored = meta.get("vocab_fingerprint", "")
        if (expected_vocab_fingerprint is not None
                and stored != expected_vocab_fingerprint):
            raise VocabularyHashMismatch(
                "checkpoint was trained against a different vocabulary"
            )

        try:
            params = _params_from_archive(archive, cfg.bidirectional)
        except (KeyError, ValueError, zipfile.BadZipFile) as exc:
            raise CorruptCheckpoint(f"damaged tensor data in {path}") from exc

    validate_params(params, cfg)
    return params, cfg, meta


def _params_from_archive(archive, bidirectional: bool, prefix: str = "") -> ModelParams:
    bwd = None
    if bidirectional:
        bwd = CellWeights(
            w_x=archive[prefix + "bwd_w_x"], w_h=archive[prefix + "bwd_w_h"],
            bias=archive[prefix + "bwd_bias"],
        )
    return ModelParams(
        embedding=archive[prefix + "embedding"],
        forward_cell=CellWeights(
            w_x=archive[prefix + "fwd_w_x"], w_h=archive[prefix + "fwd_w_h"],
            bias=archive[prefix + "fwd_bias"],
        ),
        backward_cell=bwd,
        dense_w=archive[prefix + "dense_w"],
        dense_b=archive[prefix + "dense_b"],
    )


def load_adam(path) -> AdamState | None:
    """Recover the optimizer state from a checkpoint, if it was stored."""
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError, zipfile.BadZipFile, EOFError) as exc:
        raise CorruptCheckpoint(f"cannot read checkpoint {path}: {exc}") from exc
    with archive:
        if "meta" not in archive.files:
            raise CorruptCheckpoint(f"checkpoint {path} has no metadata block")
        meta = json.loads(str(archive["meta"]))
        info = meta.get("adam")
        if info is None:
            return None
        bidirectional = bool(meta["model"]["bidirectional"])
        try:
            m = _params_from_archive(archive, bidirectional, prefix="adam_m_")
            v = _params_from_archive(archive, bidirectional, prefix="adam_v_")
        except (KeyError, ValueError) as exc:
            raise CorruptCheckpoint(f"damaged optimizer state in {path}") from exc
        return AdamState(m=m, v=v, t=int(info["t"]), beta1=float(info["beta1"]),
                         beta2=float(info["beta2"]), eps=float(info["eps"]))
