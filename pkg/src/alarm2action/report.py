"""Render evaluation artifacts: figures as PNG plus delimited siblings.

Every figure has a CSV next to it carrying the same numbers, so results
stay diffable and machine-readable even where the plots are just for
humans: training progress curves, correct-vs-incorrect prediction counts
per repair action, a confusion matrix, document length and label
distributions.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first
import numpy as np  # noqa: E402

from .sequencer import PAD_TOKEN, PairedDocument  # noqa: E402
from .trainer import EpochStats  # noqa: E402


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _write_rows(path, header: list[str], rows: list[list]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def plot_training_progress(history: list[EpochStats], out_dir) -> list[Path]:
    """Loss and accuracy curves over epochs, plus the numbers as CSV."""
    out = Path(out_dir)
    epochs = [s.epoch for s in history]
    fig, (ax_loss, ax_acc) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax_loss.plot(epochs, [s.train_loss for s in history], label="train loss")
    ax_loss.set_ylabel("cross-entropy")
    ax_loss.legend()
    ax_loss.grid(True, alpha=0.3)
    ax_acc.plot(epochs, [s.train_acc for s in history], label="train accuracy")
    val = [s.val_acc for s in history]
    if not all(np.isnan(v) for v in val):
        ax_acc.plot(epochs, val, label="validation accuracy")
    ax_acc.set_xlabel("epoch")
    ax_acc.set_ylabel("accuracy")
    ax_acc.set_ylim(0.0, 1.05)
    ax_acc.legend()
    ax_acc.grid(True, alpha=0.3)
    fig.suptitle("Training progress")
    png = _finish(fig, out / "training_progress.png")
    csv_path = _write_rows(
        out / "training_progress.csv",
        ["epoch", "train_loss", "train_acc", "val_acc"],
        [[s.epoch, s.train_loss, s.train_acc, s.val_acc] for s in history],
    )
    return [png, csv_path]


def plot_prediction_counts(confusion: np.ndarray, labels: list[str], out_dir) -> list[Path]:
    """Correct vs incorrect predictions per true repair action."""
    out = Path(out_dir)
    confusion = np.asarray(confusion)
    correct = np.diag(confusion)
    incorrect = confusion.sum(axis=1) - correct
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(max(6, 0.9 * len(labels)), 4.5))
    width = 0.4
    ax.bar(x - width / 2, correct, width, label="correct", color="#2a9d46")
    ax.bar(x + width / 2, incorrect, width, label="incorrect", color="#c23b22")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel("predictions")
    ax.set_title("Prediction outcomes per repair action")
    ax.legend()
    ax.grid(True, axis="y", alpha=0.3)
    png = _finish(fig, out / "prediction_counts.png")
    csv_path = _write_rows(
        out / "prediction_counts.csv",
        ["label", "correct", "incorrect"],
        [[labels[i], int(correct[i]), int(incorrect[i])] for i in range(len(labels))],
    )
    return [png, csv_path]


def plot_confusion_matrix(confusion: np.ndarray, labels: list[str], out_dir) -> list[Path]:
    out = Path(out_dir)
    confusion = np.asarray(confusion)
    fig, ax = plt.subplots(figsize=(max(5, 0.7 * len(labels)) + 1.5,) * 2)
    im = ax.imshow(confusion, cmap="Blues")
    ax.set_xticks(range(len(labels)))
    ax.set_yticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_yticklabels(labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    ax.set_title("Confusion matrix")
    threshold = confusion.max() / 2 if confusion.size and confusion.max() else 0.5
    for i in range(confusion.shape[0]):
        for j in range(confusion.shape[1]):
            ax.text(j, i, str(int(confusion[i, j])), ha="center", va="center",
                    color="white" if confusion[i, j] > threshold else "black",
                    fontsize=8)
    fig.colorbar(im, ax=ax, shrink=0.8)
    png = _finish(fig, out / "confusion_matrix.png")
    csv_path = _write_rows(
        out / "confusion_matrix.csv",
        ["true\\predicted"] + list(labels),
        [[labels[i]] + [int(v) for v in confusion[i]] for i in range(len(labels))],
    )
    return [png, csv_path]


def plot_document_lengths(docs: list[PairedDocument], out_dir,
                          pad_token: str = PAD_TOKEN) -> list[Path]:
    """Histogram of real (non-padding) alarms per document."""
    out = Path(out_dir)
    lengths = [sum(1 for t in doc.alarm_tokens if t != pad_token) for doc in docs]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    bins = min(30, max(lengths) if lengths else 1)
    ax.hist(lengths, bins=bins, color="#39618f", edgecolor="white")
    ax.set_xlabel("alarms per document")
    ax.set_ylabel("documents")
    ax.set_title("Alarm window lengths")
    ax.grid(True, axis="y", alpha=0.3)
    png = _finish(fig, out / "doc_lengths.png")
    csv_path = _write_rows(
        out / "doc_lengths.csv",
        ["document", "alarms"],
        [[i, n] for i, n in enumerate(lengths)],
    )
    return [png, csv_path]


def plot_label_distribution(docs: list[PairedDocument], out_dir) -> list[Path]:
    out = Path(out_dir)
    counts: dict[str, int] = {}
    for doc in docs:
        counts[doc.label] = counts.get(doc.label, 0) + 1
    labels = sorted(counts)
    values = [counts[k] for k in labels]
    fig, ax = plt.subplots(figsize=(max(6, 0.9 * len(labels)), 4.5))
    ax.bar(range(len(labels)), values, color="#39618f")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel("documents")
    ax.set_title("Repair actions in the corpus")
    ax.grid(True, axis="y", alpha=0.3)
    png = _finish(fig, out / "label_distribution.png")
    csv_path = _write_rows(
        out / "label_distribution.csv",
        ["label", "documents"],
        [[k, counts[k]] for k in labels],
    )
    return [png, csv_path]


def render_report(
    out_dir,
    history: list[EpochStats] | None = None,
    confusion: np.ndarray | None = None,
    labels: list[str] | None = None,
    docs: list[PairedDocument] | None = None,
    pad_token: str = PAD_TOKEN,
) -> list[Path]:
    """Render every artifact for which inputs were supplied."""
    written: list[Path] = []
    if history:
        written += plot_training_progress(history, out_dir)
    if confusion is not None and labels is not None:
        written += plot_prediction_counts(confusion, labels, out_dir)
        written += plot_confusion_matrix(confusion, labels, out_dir)
    if docs:
        written += plot_document_lengths(docs, out_dir, pad_token)
        written += plot_label_distribution(docs, out_dir)
    return written
