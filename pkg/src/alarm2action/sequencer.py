"""Pair responses with preceding alarms and partition the corpus.

Each repair response becomes one training document holding the texts of
every alarm on the same turbine inside the closed ``mem_days`` window
before it, oldest first. Documents are padded/truncated to a fixed length
and split 70/15/15 by a seeded shuffle.
"""

from __future__ import annotations

import json
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from pathlib import Path
from random import Random

from .errors import EmptyDataset
from .ingest import AlarmEvent, ResponseEvent, parse_timestamp

PAD_TOKEN = "<pad>"


@dataclass(frozen=True)
class SequencerConfig:
    mem_days: int = 20
    target_len: int = 75
    pad_token: str = PAD_TOKEN
    holdout_val: float = 0.3
    holdout_test_of_val: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.holdout_val < 1:
            raise ValueError("holdout_val must be in (0, 1)")
        if not 0 < self.holdout_test_of_val < 1:
            raise ValueError("holdout_test_of_val must be in (0, 1)")
        if self.target_len < 1:
            raise ValueError("target_len must be >= 1")
        if self.mem_days <= 0:
            raise ValueError("mem_days must be > 0")


@dataclass(frozen=True)
class PairedDocument:
    turbine_id: str
    response_time: datetime
    label: str
    alarm_tokens: tuple[str, ...]


@dataclass
class DatasetSplit:
    train: list[PairedDocument] = field(default_factory=list)
    validation: list[PairedDocument] = field(default_factory=list)
    test: list[PairedDocument] = field(default_factory=list)


def build_pairs(
    alarms: list[AlarmEvent],
    responses: list[ResponseEvent],
    cfg: SequencerConfig | None = None,
) -> list[PairedDocument]:
    """One document per response with at least one alarm in its window.

    The window is closed on both ends: an alarm exactly mem_days before
    the response is included. Both inputs must be sorted ascending and
    belong to the same turbine. Alarms are shared between overlapping
    windows, never consumed.
    """
    cfg = cfg or SequencerConfig()
    window = timedelta(days=cfg.mem_days)
    times = [a.time_on for a in alarms]
    docs = []
    for resp in responses:
        lo = bisect_left(times, resp.time_on - window)
        hi = bisect_right(times, resp.time_on)
        if hi > lo:
            docs.append(
                PairedDocument(
                    turbine_id=resp.turbine_id,
                    response_time=resp.time_on,
                    label=resp.text,
                    alarm_tokens=tuple(a.text for a in alarms[lo:hi]),
                )
            )
    return docs


def pad_tokens(tokens, target_len: int, pad_token: str = PAD_TOKEN) -> tuple[str, ...]:
    """Left-pad short sequences, keep the most recent tokens of long ones."""
    tokens = tuple(tokens)
    if len(tokens) >= target_len:
        return tokens[len(tokens) - target_len:]
    return (pad_token,) * (target_len - len(tokens)) + tokens


def pad_or_truncate(doc: PairedDocument, cfg: SequencerConfig | None = None) -> PairedDocument:
    cfg = cfg or SequencerConfig()
    return replace(doc, alarm_tokens=pad_tokens(doc.alarm_tokens, cfg.target_len, cfg.pad_token))


def split_indices(n: int, cfg: SequencerConfig) -> tuple[list[int], list[int], list[int]]:
    """Seeded shuffle, then train / validation / test index lists.

    Rounding rule: holdout = floor(n * holdout_val), validation =
    floor(holdout * holdout_test_of_val), test = the remainder of the
    holdout, train = everything else.
    """
    if n == 0:
        raise EmptyDataset("no documents to split")
    indices = list(range(n))
    Random(cfg.seed).shuffle(indices)
    n_holdout = int(n * cfg.holdout_val)
    n_val = int(n_holdout * cfg.holdout_test_of_val)
    n_train = n - n_holdout
    return (
        indices[:n_train],
        indices[n_train:n_train + n_val],
        indices[n_train + n_val:],
    )


def split_dataset(docs: list[PairedDocument], cfg: SequencerConfig | None = None) -> DatasetSplit:
    cfg = cfg or SequencerConfig()
    train_idx, val_idx, test_idx = split_indices(len(docs), cfg)
    return DatasetSplit(
        train=[docs[i] for i in train_idx],
        validation=[docs[i] for i in val_idx],
        test=[docs[i] for i in test_idx],
    )


# --- dataset.jsonl / split.json -------------------------------------------

def doc_to_dict(doc: PairedDocument) -> dict:
    return {
        "turbine_id": doc.turbine_id,
        "response_time": doc.response_time.isoformat(),
        "label": doc.label,
        "alarm_tokens": list(doc.alarm_tokens),
    }


def doc_from_dict(d: dict) -> PairedDocument:
    return PairedDocument(
        turbine_id=str(d["turbine_id"]),
        response_time=parse_timestamp(d["response_time"]),
        label=d["label"],
        alarm_tokens=tuple(d["alarm_tokens"]),
    )


def write_dataset(docs, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc_to_dict(doc)) + "\n")


def read_dataset(path) -> list[PairedDocument]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                docs.append(doc_from_dict(json.loads(line)))
    return docs


def write_split(path, train_idx, val_idx, test_idx, cfg: SequencerConfig,
                holdout_turbine=None, holdout_indices=None) -> None:
    payload = {
        "train": list(train_idx),
        "validation": list(val_idx),
        "test": list(test_idx),
        "config": {
            "mem_days": cfg.mem_days,
            "target_len": cfg.target_len,
            "pad_token": cfg.pad_token,
            "holdout_val": cfg.holdout_val,
            "holdout_test_of_val": cfg.holdout_test_of_val,
            "seed": cfg.seed,
        },
    }
    if holdout_turbine is not None:
        payload["holdout_turbine"] = {
            "turbine_id": holdout_turbine,
            "indices": list(holdout_indices or []),
        }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)


def read_split(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def split_from_file(path, docs: list[PairedDocument]) -> DatasetSplit:
    """Resolve a stored index split against the document list it indexes."""
    payload = read_split(path)
    n = len(docs)
    for part in ("train", "validation", "test"):
        for i in payload[part]:
            if not 0 <= i < n:
                raise ValueError(f"split index {i} out of range for {n} documents")
    return DatasetSplit(
        train=[docs[i] for i in payload["train"]],
        validation=[docs[i] for i in payload["validation"]],
        test=[docs[i] for i in payload["test"]],
    )
