"""First-order Markov model over alarm texts.

Advisory next-alarm hints and sequence scores on the same token space as
the classifier; it never feeds back into classifier inputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyInput, UnknownState

ROW_SUM_TOL = 1e-9


@dataclass
class TransitionModel:
    states: list[str]
    counts: np.ndarray  # [S, S] int64 adjacent-pair counts
    probs: np.ndarray   # [S, S] row-stochastic where defined
    smoothing_alpha: float = 0.0
    state_index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.state_index = {s: i for i, s in enumerate(self.states)}

    @property
    def absorbing_states(self) -> list[str]:
        """States with no observed outgoing transition (alpha = 0 only)."""
        if self.smoothing_alpha > 0:
            return []
        zero_rows = self.counts.sum(axis=1) == 0
        return [s for s, z in zip(self.states, zero_rows) if z]


def fit_transitions(sequences: list[list[str]], alpha: float = 0.0) -> TransitionModel:
    """Count adjacent pairs across all sequences and row-normalize.

    With alpha > 0 additive smoothing applies everywhere and unobserved
    rows become uniform; with alpha = 0 they stay all-zero and are flagged
    absorbing.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    states = sorted({tok for seq in sequences for tok in seq})
    if not states:
        raise EmptyInput("no states in input sequences")
    index = {s: i for i, s in enumerate(states)}
    n = len(states)
    counts = np.zeros((n, n), dtype=np.int64)
    for seq in sequences:
        for src, dst in zip(seq, seq[1:]):
            counts[index[src], index[dst]] += 1
    smoothed = counts.astype(np.float64) + alpha
    row_sums = smoothed.sum(axis=1, keepdims=True)
    probs = np.divide(smoothed, row_sums, out=np.zeros_like(smoothed),
                      where=row_sums > 0)
    return TransitionModel(states=states, counts=counts, probs=probs,
                           smoothing_alpha=alpha)


def predict_next(model: TransitionModel, current: str, k: int) -> list[tuple[str, float]]:
    """Top-k successors of ``current`` by probability, ties by state order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    idx = model.state_index.get(current)
    if idx is None:
        raise UnknownState(current)
    row = model.probs[idx]
    order = sorted(range(len(model.states)), key=lambda j: (-row[j], j))
    return [(model.states[j], float(row[j])) for j in order[:k]]


def sequence_logprob(model: TransitionModel, seq: list[str]) -> float:
    """Sum of log transition probabilities; -inf on any zero transition."""
    if len(seq) < 2:
        raise ValueError("sequence must have at least 2 states")
    total = 0.0
    for src, dst in zip(seq, seq[1:]):
        i = model.state_index.get(src)
        j = model.state_index.get(dst)
        if i is None:
            raise UnknownState(src)
        if j is None:
            raise UnknownState(dst)
        p = model.probs[i, j]
        if p <= 0.0:
            return -math.inf
        total += math.log(p)
    return total


def save_markov(model: TransitionModel, path) -> None:
    payload = {
        "states": model.states,
        "probs": model.probs.ravel().tolist(),
        "alpha": model.smoothing_alpha,
        "counts": model.counts.ravel().tolist(),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_markov(path) -> TransitionModel:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    states = payload["states"]
    n = len(states)
    probs = np.asarray(payload["probs"], dtype=np.float64).reshape(n, n)
    counts = np.asarray(
        payload.get("counts", [0] * (n * n)), dtype=np.int64
    ).reshape(n, n)
    return TransitionModel(states=states, counts=counts, probs=probs,
                           smoothing_alpha=float(payload.get("alpha", 0.0)))
