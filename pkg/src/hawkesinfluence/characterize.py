"""Account and tweet analytics over tweet archives.

Covers posting-time histograms, account creation timelines, n-gram and
top-item tables, per-user diversity counts, follower growth, screen-name
changes, conservative deletion estimates and tweets-per-day baseline matching.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import date, datetime, timezone
from typing import Iterable, Mapping, Sequence

import numpy as np

from .urls import domain_of
from .exceptions import UrlParseError

__all__ = [
    "TweetRecord",
    "AccountRecord",
    "DeletionObservation",
    "ITEM_FIELDS",
    "parse_datetime",
    "read_tweets",
    "build_accounts",
    "temporal_histograms",
    "creation_timeline",
    "top_ngrams",
    "top_items",
    "per_user_diversity",
    "follower_growth",
    "screen_name_changes",
    "observed_deletions",
    "monthly_deletion_percentages",
    "tweets_per_day",
    "match_rates",
    "baseline_match",
]

ITEM_FIELDS = ("hashtag", "mention", "domain", "client", "language", "timezone")
_WORD_RE = re.compile(r"[^\W_]+")


def parse_datetime(value) -> datetime:
    if isinstance(value, datetime):
        dt = value
    elif isinstance(value, (int, float)) and not isinstance(value, bool):
        dt = datetime.fromtimestamp(float(value), tz=timezone.utc)
    else:
        text = str(value).strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        try:
            dt = datetime.fromisoformat(text)
        except ValueError:
            raise ValueError(f"unparseable timestamp: {value!r}") from None
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _nonneg(x, name):
    if x is None:
        return None
    x = int(x)
    if x < 0:
        raise ValueError(f"{name} must be non-negative, got {x}")
    return x


@dataclass(frozen=True)
class TweetRecord:
    user_id: str
    timestamp: datetime
    text: str = ""
    language_code: str | None = None
    client_name: str | None = None
    hashtags: tuple[str, ...] = ()
    mentions: tuple[str, ...] = ()
    urls: tuple[str, ...] = ()
    screen_name_at_tweet: str | None = None
    description_at_tweet: str | None = None
    location_string: str | None = None
    timezone_string: str | None = None
    followers_count: int | None = None
    friends_count: int | None = None
    statuses_count: int | None = None
    media_count_image: int = 0
    has_video: bool = False
    account_created_at: datetime | None = None
    # precomputed externally; only compared here
    sentiment: float | None = None
    subjectivity: float | None = None
    latitude: float | None = None
    longitude: float | None = None
    tweet_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "user_id", str(self.user_id))
        object.__setattr__(self, "timestamp", parse_datetime(self.timestamp))
        if self.account_created_at is not None:
            object.__setattr__(self, "account_created_at", parse_datetime(self.account_created_at))
        for name in ("followers_count", "friends_count", "statuses_count", "media_count_image"):
            object.__setattr__(self, name, _nonneg(getattr(self, name), name))
        for name in ("hashtags", "mentions", "urls"):
            object.__setattr__(self, name, tuple(getattr(self, name) or ()))

    @classmethod
    def from_dict(cls, d: Mapping) -> "TweetRecord":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown tweet fields: {sorted(unknown)}")
        return cls(**dict(d))

    def to_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            if isinstance(v, datetime):
                v = v.isoformat()
            elif isinstance(v, tuple):
                v = list(v)
            out[name] = v
        return out


def read_tweets(path) -> list[TweetRecord]:
    with open(path, encoding="utf-8") as fh:
        return [TweetRecord.from_dict(json.loads(line)) for line in fh if line.strip()]


def _uid_key(uid: str):
    return (0, int(uid), "") if uid.isdigit() else (1, 0, uid)


@dataclass(frozen=True)
class AccountRecord:
    user_id: str
    creation_date: datetime | None
    tweets: tuple[TweetRecord, ...]

    def __post_init__(self):
        ordered = tuple(sorted(self.tweets, key=lambda t: (t.timestamp, t.tweet_id or "")))
        object.__setattr__(self, "tweets", ordered)

    @property
    def screen_names(self) -> list[tuple[str, datetime]]:
        """Distinct screen names with the time each was first seen."""
        seen: dict[str, datetime] = {}
        for t in self.tweets:
            if t.screen_name_at_tweet is not None and t.screen_name_at_tweet not in seen:
                seen[t.screen_name_at_tweet] = t.timestamp
        return list(seen.items())

    def series(self, name: str) -> list[tuple[datetime, int]]:
        return [(t.timestamp, getattr(t, name)) for t in self.tweets if getattr(t, name) is not None]


def build_accounts(tweets: Iterable[TweetRecord]) -> list[AccountRecord]:
    by_user: dict[str, list[TweetRecord]] = defaultdict(list)
    for t in tweets:
        by_user[t.user_id].append(t)
    accounts = []
    for uid in sorted(by_user, key=_uid_key):
        created = [t.account_created_at for t in by_user[uid] if t.account_created_at is not None]
        accounts.append(AccountRecord(uid, min(created) if created else None, tuple(by_user[uid])))
    return accounts


def temporal_histograms(tweets: Sequence[TweetRecord]) -> tuple[np.ndarray, np.ndarray]:
    """Normalized hour-of-day (24) and hour-of-week (168, Monday 00:00 UTC = 0) histograms."""
    if not tweets:
        raise ValueError("temporal_histograms needs at least one tweet")
    day = np.zeros(24)
    week = np.zeros(168)
    for t in tweets:
        ts = t.timestamp
        day[ts.hour] += 1
        week[ts.weekday() * 24 + ts.hour] += 1
    return day / len(tweets), week / len(tweets)


def creation_timeline(accounts: Iterable[AccountRecord]) -> dict[date, int]:
    """Accounts created per UTC calendar day; days without creations are omitted."""
    counts = Counter(a.creation_date.date() for a in accounts if a.creation_date is not None)
    return dict(sorted(counts.items()))


def _tokens(text: str, mode: str) -> set[str]:
    text = text.lower()
    if mode == "word":
        return set(_WORD_RE.findall(text))
    if mode == "char4":
        return {text[i:i + 4] for i in range(len(text) - 3)}
    if mode == "word-bigram":
        words = _WORD_RE.findall(text)
        return {f"{a} {b}" for a, b in zip(words, words[1:])}
    raise ValueError(f"unknown n-gram mode {mode!r}; expected word, char4 or word-bigram")


def _ranked(counter: Counter, total: int, n: int) -> list[tuple[str, float]]:
    items = sorted(counter.items(), key=lambda kv: (-kv[1], kv[0]))[:n]
    return [(k, 100.0 * v / total) for k, v in items]


def top_ngrams(names: Sequence[str], mode: str = "word", n: int = 10) -> list[tuple[str, float]]:
    """Top tokens by the percent of inputs that contain them (case-folded)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    names = [s for s in names if s is not None]
    counter: Counter = Counter()
    for name in names:
        counter.update(_tokens(name, mode))
    return _ranked(counter, len(names), n) if names else []


def _items(tweet: TweetRecord, field: str, redirect_map=None) -> set[str]:
    if field == "hashtag":
        return {h.lstrip("#") for h in tweet.hashtags if h}
    if field == "mention":
        return {m.lstrip("@") for m in tweet.mentions if m}
    if field == "domain":
        out = set()
        for u in tweet.urls:
            try:
                out.add(domain_of(u, redirect_map))
            except UrlParseError:
                continue
        return out
    value = {"client": tweet.client_name, "language": tweet.language_code,
             "timezone": tweet.timezone_string, "location": tweet.location_string}.get(field, KeyError)
    if value is KeyError:
        raise ValueError(f"unknown field {field!r}; expected one of {ITEM_FIELDS + ('location',)}")
    return {value} if value else set()


def top_items(tweets: Sequence[TweetRecord], field: str, n: int = 10, redirect_map=None) -> list[tuple[str, float]]:
    """Top items by percent of tweets carrying them; each item counts once per tweet."""
    if n < 1:
        raise ValueError("n must be >= 1")
    counter: Counter = Counter()
    for t in tweets:
        counter.update(_items(t, field, redirect_map))
    return _ranked(counter, len(tweets), n) if tweets else []


def per_user_diversity(tweets: Iterable[TweetRecord], field: str) -> dict[str, int]:
    """Number of distinct values of ``field`` per user."""
    values: dict[str, set] = defaultdict(set)
    for t in tweets:
        values[t.user_id] |= _items(t, field)
    return {uid: len(values[uid]) for uid in sorted(values, key=_uid_key)}


def follower_growth(account: AccountRecord) -> tuple[int, int]:
    """Change in followers and friends from the first to the last tweet."""
    fol = [c for _, c in account.series("followers_count")]
    fri = [c for _, c in account.series("friends_count")]
    return (fol[-1] - fol[0] if fol else 0, fri[-1] - fri[0] if fri else 0)


def screen_name_changes(account: AccountRecord) -> tuple[list[str], int]:
    """Run-length compressed screen-name history and the number of changes (case-sensitive)."""
    runs: list[str] = []
    for t in account.tweets:
        name = t.screen_name_at_tweet
        if name is not None and (not runs or runs[-1] != name):
            runs.append(name)
    return runs, max(0, len(runs) - 1)


@dataclass(frozen=True)
class DeletionObservation:
    """At least ``min_deleted`` tweets vanished between two consecutive observed tweets."""

    interval: tuple[datetime, datetime]
    min_deleted: int
    count_before: int
    count_after: int

    @property
    def percentage(self) -> float:
        # share of the c_i + 1 tweets known to exist once the second tweet is posted
        return 100.0 * self.min_deleted / (self.count_before + 1)


def observed_deletions(account: AccountRecord) -> tuple[list[DeletionObservation], float]:
    """Conservative deletion observations and the account's deleted fraction.

    Posting a tweet raises the status counter by one, so a later counter below
    ``c_i + 1`` means at least ``c_i + 1 - c_{i+1}`` tweets were deleted. The
    fraction is the summed minimum deletions over the maximum observed counter.
    """
    series = account.series("statuses_count")
    obs = []
    for (t0, c0), (t1, c1) in zip(series, series[1:]):
        missing = c0 + 1 - c1
        if missing > 0:
            obs.append(DeletionObservation((t0, t1), missing, c0, c1))
    top = max((c for _, c in series), default=0)
    fraction = sum(o.min_deleted for o in obs) / top if top > 0 else 0.0
    return obs, fraction


def monthly_deletion_percentages(observations: Iterable[DeletionObservation]) -> dict[str, float]:
    """Mean per-observation percentage by UTC month (``YYYY-MM``) of the interval's end."""
    buckets: dict[str, list[float]] = defaultdict(list)
    for o in observations:
        buckets[o.interval[1].strftime("%Y-%m")].append(o.percentage)
    return {m: float(np.mean(v)) for m, v in sorted(buckets.items())}


def tweets_per_day(account: AccountRecord, since: datetime | None = None) -> float:
    """Status count at the first tweet (on or after ``since``) over days since creation."""
    if account.creation_date is None:
        raise ValueError(f"account {account.user_id} has no creation date")
    since = parse_datetime(since) if since is not None else None
    for t in account.tweets:
        if t.statuses_count is not None and (since is None or t.timestamp >= since):
            days = (t.timestamp - account.creation_date).total_seconds() / 86400.0
            return t.statuses_count / max(days, 1.0)
    raise ValueError(f"account {account.user_id} has no tweet with a status count")


def match_rates(candidate_rates: Sequence[float], reference_rates: Sequence[float], size: int,
                candidate_ids: Sequence[str] | None = None) -> list[int]:
    """Greedy quantile matching; returns indices into ``candidate_rates``.

    The sorted reference is cut into ``size`` equal-mass groups; each group's
    middle order statistic is a target, and targets (ascending) take the
    nearest unused candidate, ties going to the lower id.
    """
    cand = np.asarray(candidate_rates, dtype=float)
    ref = np.sort(np.asarray(reference_rates, dtype=float))
    if size < 1 or size > cand.size:
        raise ValueError(f"size must be in [1, {cand.size}], got {size}")
    if ref.size == 0:
        raise ValueError("reference_rates is empty")
    ids = list(candidate_ids) if candidate_ids is not None else [str(i) for i in range(cand.size)]
    free = np.ones(cand.size, dtype=bool)
    chosen = []
    for i in range(size):
        target = ref[min(ref.size - 1, int(math.floor((i + 0.5) * ref.size / size)))]
        dist = np.where(free, np.abs(cand - target), np.inf)
        ties = np.flatnonzero(dist == dist.min())
        pick = min(ties, key=lambda j: _uid_key(ids[j]))
        free[pick] = False
        chosen.append(int(pick))
    return chosen


def baseline_match(candidates: Sequence[AccountRecord], reference_rates: Sequence[float], size: int,
                   since: datetime | None = None) -> list[AccountRecord]:
    rates = [tweets_per_day(a, since) for a in candidates]
    idx = match_rates(rates, reference_rates, size, [a.user_id for a in candidates])
    return [candidates[i] for i in idx]
