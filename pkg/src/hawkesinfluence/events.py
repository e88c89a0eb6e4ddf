"""Event and sequence data model, row ingestion and per-URL sequence building."""

from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .exceptions import UnknownGroupError
from .urls import DEFAULT_STATE_DOMAINS, Category, canonicalize_url

logger = logging.getLogger(__name__)

__all__ = [
    "GroupId",
    "Event",
    "EventSequence",
    "Category",
    "TIME_UNITS",
    "make_groups",
    "parse_timestamp",
    "read_event_rows",
    "build_sequences",
    "CountsSummary",
    "counts_summary",
    "write_bundle",
    "read_bundle",
]

TIME_UNITS = {"seconds": 1.0, "minutes": 60.0, "hours": 3600.0, "days": 86400.0}
SUMMARY_CATEGORIES = ("RussianState", "OtherNews", "All")


@dataclass(frozen=True, order=True)
class GroupId:
    index: int
    label: str


@dataclass(frozen=True)
class Event:
    group: GroupId
    timestamp: float
    source_id: str | None = None
    # simulator bookkeeping: index of the parent's group, -1 for background
    parent_group: int | None = None


def make_groups(labels: Sequence[str], min_groups: int = 2) -> tuple[GroupId, ...]:
    labels = list(labels)
    if len(labels) < min_groups:
        raise ValueError(f"at least {min_groups} groups are required, got {labels!r}")
    if len(set(labels)) != len(labels):
        raise ValueError(f"group labels must be unique, got {labels!r}")
    return tuple(GroupId(i, str(lab)) for i, lab in enumerate(labels))


def _event_key(ev: Event):
    return (ev.timestamp, ev.group.index, ev.source_id or "")


@dataclass(frozen=True)
class EventSequence:
    """All events of one URL over an observation window ``[0, window_T]``."""

    url: str
    category: Category
    events: tuple[Event, ...]
    window_T: float
    groups: tuple[GroupId, ...]

    def __post_init__(self):
        object.__setattr__(self, "category", Category(self.category))
        object.__setattr__(self, "events", tuple(self.events))
        if not self.window_T > 0:
            raise ValueError(f"window_T must be > 0, got {self.window_T}")
        keys = [_event_key(e) for e in self.events]
        if any(b < a for a, b in zip(keys, keys[1:])):
            raise ValueError("events must be sorted by (timestamp, group index, source_id)")
        if self.events and (keys[0][0] < 0 or keys[-1][0] > self.window_T):
            raise ValueError("event timestamps must lie in [0, window_T]")
        known = set(self.groups)
        if any(e.group not in known for e in self.events):
            raise ValueError("event group outside the sequence's group universe")

    @classmethod
    def from_events(cls, url, category, events: Iterable[Event], window_T, groups):
        return cls(url, category, tuple(sorted(events, key=_event_key)), window_T, tuple(groups))

    @property
    def K(self) -> int:
        return len(self.groups)

    @cached_property
    def times(self) -> np.ndarray:
        return np.array([e.timestamp for e in self.events], dtype=float)

    @cached_property
    def marks(self) -> np.ndarray:
        return np.array([e.group.index for e in self.events], dtype=np.intp)

    def counts(self) -> np.ndarray:
        return np.bincount(self.marks, minlength=self.K)

    def to_dict(self) -> dict:
        events = []
        for e in self.events:
            row = {"group": e.group.label, "t": e.timestamp}
            if e.source_id is not None:
                row["source_id"] = e.source_id
            if e.parent_group is not None:
                row["parent_group"] = e.parent_group
            events.append(row)
        return {
            "url": self.url,
            "category": self.category.value,
            "window_T": self.window_T,
            "groups": [g.label for g in self.groups],
            "events": events,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "EventSequence":
        groups = make_groups(d["groups"], min_groups=1)
        by_label = {g.label: g for g in groups}
        events = []
        for row in d["events"]:
            if row["group"] not in by_label:
                raise UnknownGroupError(row["group"], by_label)
            events.append(Event(by_label[row["group"]], float(row["t"]),
                                row.get("source_id"), row.get("parent_group")))
        return cls(d["url"], Category(d["category"]), tuple(events), float(d["window_T"]), groups)


def write_bundle(sequences: Iterable[EventSequence], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for seq in sequences:
            fh.write(json.dumps(seq.to_dict(), sort_keys=True) + "\n")


def read_bundle(path) -> list[EventSequence]:
    with open(path, encoding="utf-8") as fh:
        return [EventSequence.from_dict(json.loads(line)) for line in fh if line.strip()]


def parse_timestamp(value, time_unit: str = "hours") -> float:
    """ISO-8601 string (naive means UTC) or a number, returned in ``time_unit`` since the epoch."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, datetime):
        dt = value
    else:
        text = str(value).strip()
        try:
            return float(text)
        except ValueError:
            pass
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(text)
        except ValueError:
            raise ValueError(f"unparseable timestamp: {value!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp() / TIME_UNITS[time_unit]


def read_event_rows(path) -> list[dict]:
    """Load raw rows from line-JSON (``.jsonl``/``.json``) or a delimited file with a header."""
    path = Path(path)
    if path.suffix in (".jsonl", ".json", ".ndjson"):
        with open(path, encoding="utf-8") as fh:
            return [json.loads(line) for line in fh if line.strip()]
    delimiter = "\t" if path.suffix in (".tsv", ".tab") else ","
    with open(path, newline="", encoding="utf-8") as fh:
        return [dict(row) for row in csv.DictReader(fh, delimiter=delimiter)]


def _row_time(row, time_unit):
    for key in ("timestamp_iso8601", "timestamp", "t"):
        if key in row and row[key] not in (None, ""):
            return parse_timestamp(row[key], time_unit)
    raise ValueError(f"row has no timestamp field: {row!r}")


def build_sequences(
    rows: Iterable[Mapping],
    groups: Sequence[GroupId] | Sequence[str],
    min_total_events: int = 1,
    *,
    redirect_map: Mapping[str, str] | None = None,
    state_domains=DEFAULT_STATE_DOMAINS,
    news_domains=frozenset(),
    horizon: float | None = None,
    padding: float = 24.0,
    time_unit: str = "hours",
) -> list[EventSequence]:
    """Group raw rows into one rebased :class:`EventSequence` per canonical URL.

    Duplicate rows (same canonical URL, group, source id and timestamp) are
    dropped. Each sequence starts at its earliest event; its window is
    ``horizon`` when given, otherwise the observed span plus ``padding``.
    Sequences are returned sorted by URL.
    """
    if groups and isinstance(next(iter(groups)), GroupId):
        universe = tuple(groups)
    else:
        universe = make_groups(groups)
    by_label = {g.label: g for g in universe}

    rows = list(rows)
    stamps = [_row_time(r, time_unit) for r in rows]
    if any(b < a for a, b in zip(stamps, stamps[1:])):
        logger.warning("input rows are not in time order; re-sorting %d rows", len(rows))

    grouped: dict[str, list[tuple[float, Event]]] = defaultdict(list)
    categories: dict[str, Category] = {}
    seen = set()
    for row, stamp in zip(rows, stamps):
        label = str(row["group"])
        if label not in by_label:
            raise UnknownGroupError(label, by_label)
        rec = canonicalize_url(row["url"], redirect_map, state_domains, news_domains)
        sid = row.get("source_id")
        sid = None if sid in (None, "") else str(sid)
        key = (rec.canonical, label, sid, stamp)
        if key in seen:
            continue
        seen.add(key)
        categories[rec.canonical] = rec.category
        grouped[rec.canonical].append((stamp, Event(by_label[label], 0.0, sid)))

    sequences = []
    for url in sorted(grouped):
        items = grouped[url]
        if len(items) < min_total_events:
            continue
        origin = min(s for s, _ in items)
        events = [Event(ev.group, s - origin, ev.source_id) for s, ev in items]
        span = max(ev.timestamp for ev in events)
        if horizon is not None:
            if horizon < span:
                raise ValueError(f"horizon {horizon} shorter than the span {span} of {url!r}")
            window = float(horizon)
        else:
            window = span + padding
        if window <= 0:
            window = padding if padding > 0 else 1.0
        sequences.append(EventSequence.from_events(url, categories[url], events, window, universe))
    return sequences


@dataclass
class CountsSummary:
    """URL and event counts per (category, group), plus mean background rates once fitted."""

    groups: tuple[str, ...]
    urls: dict[str, dict[str, int]]
    events: dict[str, dict[str, int]]
    mean_mu: dict[str, dict[str, float | None]] = field(default_factory=dict)

    def event_counts(self, category: str = "All") -> np.ndarray:
        return np.array([self.events[category][g] for g in self.groups], dtype=float)

    def rows(self) -> list[dict]:
        """Flattened table rows: metric x category, one column per group."""
        out = []
        for metric, table in (("URLs", self.urls), ("Events", self.events), ("Mean lambda0", self.mean_mu)):
            for cat in SUMMARY_CATEGORIES:
                row = {"metric": metric, "category": cat}
                for g in self.groups:
                    row[g] = table.get(cat, {}).get(g)
                out.append(row)
        return out

    def to_dict(self) -> dict:
        return {"groups": list(self.groups), "urls": self.urls, "events": self.events,
                "mean_mu": self.mean_mu}

    @classmethod
    def from_dict(cls, d) -> "CountsSummary":
        return cls(tuple(d["groups"]), d["urls"], d["events"], d.get("mean_mu", {}))


def counts_summary(sequences: Sequence[EventSequence], groups: Sequence[str], aggregate=None) -> CountsSummary:
    labels = tuple(groups)
    urls = {c: {g: 0 for g in labels} for c in SUMMARY_CATEGORIES}
    events = {c: {g: 0 for g in labels} for c in SUMMARY_CATEGORIES}
    for seq in sequences:
        per_group = dict(zip((g.label for g in seq.groups), seq.counts()))
        cats = ["All"] if seq.category is Category.OTHER else [seq.category.value, "All"]
        for cat in cats:
            for g in labels:
                n = int(per_group.get(g, 0))
                events[cat][g] += n
                urls[cat][g] += int(n > 0)
    mean_mu: dict[str, dict[str, float | None]] = {c: {g: None for g in labels} for c in SUMMARY_CATEGORIES}
    if aggregate is not None:
        for cat in SUMMARY_CATEGORIES:
            mu = aggregate.mean_mu.get(cat)
            if mu is None:
                continue
            for k, g in enumerate(aggregate.groups):
                if g in mean_mu[cat] and np.isfinite(mu[k]):
                    mean_mu[cat][g] = float(mu[k])
    return CountsSummary(labels, urls, events, mean_mu)
