"""Token and label vocabularies plus document encoding.

The classifier's token space is the normalized alarm text: one vocabulary
entry per distinct alarm string seen in the TRAINING partition, with index
0 reserved for padding and 1 for unknowns, so validation/test tokens can
never leak new rows into the embedding matrix.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, EmptyCorpus, UnknownLabel
from .sequencer import PAD_TOKEN, PairedDocument

logger = logging.getLogger(__name__)

PAD_INDEX = 0
UNK_INDEX = 1
UNK_TOKEN = "<unk>"

EMBED_INIT_LOW = -0.05
EMBED_INIT_HIGH = 0.05


@dataclass
class Vocabulary:
    index_to_token: list[str]
    labels: list[str]
    pad_token: str = PAD_TOKEN
    unk_token: str = UNK_TOKEN
    token_to_index: dict[str, int] = field(init=False)
    label_to_index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.token_to_index = {t: i for i, t in enumerate(self.index_to_token)}
        self.label_to_index = {l: i for i, l in enumerate(self.labels)}
        assert self.index_to_token[PAD_INDEX] == self.pad_token
        assert self.index_to_token[UNK_INDEX] == self.unk_token

    def __len__(self) -> int:
        return len(self.index_to_token)

    @property
    def num_classes(self) -> int:
        return len(self.labels)

    def decode(self, token_ids) -> list[str]:
        return [self.index_to_token[i] for i in token_ids]

    def fingerprint(self) -> str:
        payload = json.dumps(
            {"tokens": self.index_to_token, "labels": self.labels},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def tokenize(text: str) -> list[str]:
    """Whitespace tokenization of already-cleaned text."""
    return text.split()


def build_vocab(
    docs: list[PairedDocument],
    pad_token: str = PAD_TOKEN,
    unk_token: str = UNK_TOKEN,
) -> Vocabulary:
    """Vocabulary over the training documents only.

    Tokens and labels are stored in sorted order so the result does not
    depend on document order.
    """
    tokens = set()
    labels = set()
    for doc in docs:
        labels.add(doc.label)
        for tok in doc.alarm_tokens:
            if tok != pad_token:
                tokens.add(tok)
    if not tokens:
        raise EmptyCorpus("no tokens in training documents")
    tokens.discard(unk_token)
    return Vocabulary(
        index_to_token=[pad_token, unk_token] + sorted(tokens),
        labels=sorted(labels),
        pad_token=pad_token,
        unk_token=unk_token,
    )


def encode_tokens(tokens, vocab: Vocabulary) -> list[int]:
    return [vocab.token_to_index.get(tok, UNK_INDEX) for tok in tokens]


def encode_document(doc: PairedDocument, vocab: Vocabulary) -> tuple[list[int], int]:
    """Token-id sequence plus label id for an already-padded document."""
    label_id = vocab.label_to_index.get(doc.label)
    if label_id is None:
        raise UnknownLabel(doc.label)
    return encode_tokens(doc.alarm_tokens, vocab), label_id


@dataclass(frozen=True)
class EmbeddingInit:
    dim: int = 300
    mode: str = "random"  # "random" | "from_file"
    file: str | None = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.mode not in ("random", "from_file"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if (self.mode == "from_file") != (self.file is not None):
            raise ValueError("file is required iff mode='from_file'")

    def realize(self, vocab: Vocabulary, rng: np.random.Generator) -> np.ndarray:
        if self.mode == "from_file":
            return load_embedding_file(self.file, vocab, self.dim, rng=rng)
        return init_embedding_matrix(vocab, self.dim, rng)


def init_embedding_matrix(vocab: Vocabulary, dim: int, rng: np.random.Generator) -> np.ndarray:
    matrix = rng.uniform(EMBED_INIT_LOW, EMBED_INIT_HIGH, size=(len(vocab), dim))
    matrix[PAD_INDEX] = 0.0
    return matrix


def load_embedding_file(
    path, vocab: Vocabulary, dim: int, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Text embeddings, one ``token f1 .. fdim`` line per token.

    Rows for tokens present in both file and vocabulary are copied;
    everything else keeps its random init, and the pad row is zeroed.
    """
    rng = rng or np.random.default_rng(0)
    matrix = init_embedding_matrix(vocab, dim, rng)
    loaded = 0
    lines = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            lines += 1
            token, values = parts[0], parts[1:]
            if len(values) != dim:
                raise DimensionMismatch(line_no, dim, len(values))
            idx = vocab.token_to_index.get(token)
            if idx is not None and idx not in (PAD_INDEX,):
                matrix[idx] = [float(v) for v in values]
                loaded += 1
    if lines == 0:
        logger.warning("embedding file %s is empty; using random init", path)
    matrix[PAD_INDEX] = 0.0
    return matrix


def save_vocab(vocab: Vocabulary, path, embed_dim: int | None = None) -> None:
    payload = {
        "tokens": vocab.index_to_token,
        "labels": vocab.labels,
        "pad_token": vocab.pad_token,
        "unk_token": vocab.unk_token,
    }
    if embed_dim is not None:
        payload["dim"] = embed_dim
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)


def load_vocab(path) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return Vocabulary(
        index_to_token=payload["tokens"],
        labels=payload["labels"],
        pad_token=payload.get("pad_token", PAD_TOKEN),
        unk_token=payload.get("unk_token", UNK_TOKEN),
    )
