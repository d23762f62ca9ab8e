"""Parsing and cleaning of raw alarm / response log files.

Input files are per-turbine CSVs with a ``time_on,text`` header. Cleaning
lowercases the text, strips configured noise characters plus all Unicode
punctuation, collapses whitespace, drops rows that clean to nothing,
suppresses chattering alarms and removes infrequent response labels.
"""

from __future__ import annotations

import csv
import unicodedata
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import EmptyFile, MalformedRow, UnsortedInput

# The raw exports never document their junk characters; these cover the
# separators and markup seen in practice. Override via CleaningConfig.
DEFAULT_NOISE_CHARS = "#*|\t"


@dataclass(frozen=True)
class CleaningConfig:
    noise_chars: str = DEFAULT_NOISE_CHARS
    chatter_window_s: float = 60.0
    min_response_count: int = 2

    def __post_init__(self):
        if self.chatter_window_s <= 0:
            raise ValueError("chatter_window_s must be > 0")
        if self.min_response_count < 1:
            raise ValueError("min_response_count must be >= 1")


@dataclass(frozen=True)
class AlarmEvent:
    turbine_id: str
    time_on: datetime
    text: str


@dataclass(frozen=True)
class ResponseEvent:
    turbine_id: str
    time_on: datetime
    text: str


def clean_text(raw: str, cfg: CleaningConfig | None = None) -> str:
    """Normalize one alarm/response text.

    Lowercases, replaces noise characters and any Unicode punctuation with
    a space, then collapses whitespace runs. May return "" (callers drop
    empty strings).
    """
    cfg = cfg or CleaningConfig()
    noise = set(cfg.noise_chars)
    out = []
    for ch in raw.lower():
        if ch in noise or unicodedata.category(ch).startswith("P"):
            out.append(" ")
        else:
            out.append(ch)
    return " ".join("".join(out).split())


def parse_timestamp(value: str) -> datetime:
    """Strict RFC 3339 / ISO 8601 parse, normalized to aware UTC."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _parse_log(path, turbine_id: str, cfg: CleaningConfig):
    """Shared CSV reader for alarm and response files.

    Returns (turbine_id, time_on, text) tuples sorted ascending by time_on
    (stable), with text cleaned and empty-after-cleaning rows dropped.
    """
    cfg = cfg or CleaningConfig()
    rows = []
    data_rows = 0
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["time_on", "text"]:
            raise MalformedRow(1, "expected header 'time_on,text'")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise MalformedRow(line_no, f"expected 2 fields, got {len(row)}")
            data_rows += 1
            try:
                ts = parse_timestamp(row[0])
            except ValueError:
                raise MalformedRow(line_no, f"bad timestamp {row[0]!r}") from None
            text = clean_text(row[1], cfg)
            if text:
                rows.append((turbine_id, ts, text))
    if data_rows == 0:
        raise EmptyFile(str(path))
    rows.sort(key=lambda r: r[1])
    return rows


def parse_alarm_log(
    path, turbine_id: str, cfg: CleaningConfig | None = None
) -> list[AlarmEvent]:
    cfg = cfg or CleaningConfig()
    return [AlarmEvent(*row) for row in _parse_log(path, turbine_id, cfg)]


def parse_response_log(
    path, turbine_id: str, cfg: CleaningConfig | None = None
) -> list[ResponseEvent]:
    cfg = cfg or CleaningConfig()
    return [ResponseEvent(*row) for row in _parse_log(path, turbine_id, cfg)]


def remove_chattering(
    events: list[AlarmEvent], cfg: CleaningConfig | None = None
) -> list[AlarmEvent]:
    """Suppress repeats of the same alarm text inside the chatter window.

    Greedy keep-earliest rule: an event is kept only if it is the first of
    its text, or more than ``chatter_window_s`` after the last KEPT event
    with the same text. Requires input sorted ascending by time_on.
    """
    cfg = cfg or CleaningConfig()
    for prev, cur in zip(events, events[1:]):
        if cur.time_on < prev.time_on:
            raise UnsortedInput("events must be sorted ascending by time_on")
    kept: list[AlarmEvent] = []
    last_kept: dict[str, datetime] = {}
    for ev in events:
        anchor = last_kept.get(ev.text)
        if anchor is None or (ev.time_on - anchor).total_seconds() > cfg.chatter_window_s:
            kept.append(ev)
            last_kept[ev.text] = ev.time_on
    return kept


def filter_infrequent_responses(
    events: list[ResponseEvent], cfg: CleaningConfig | None = None
) -> tuple[list[ResponseEvent], set[str]]:
    """Drop response labels occurring fewer than min_response_count times."""
    cfg = cfg or CleaningConfig()
    counts = Counter(ev.text for ev in events)
    dropped = {label for label, n in counts.items() if n < cfg.min_response_count}
    kept = [ev for ev in events if ev.text not in dropped]
    return kept, dropped


def write_event_csv(path, events) -> None:
    """Write events back out in the canonical ``time_on,text`` format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_on", "text"])
        for ev in events:
            writer.writerow([ev.time_on.isoformat(), ev.text])
