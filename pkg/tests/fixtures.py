"""On-disk fixture builders shared by the CLI and acceptance tests."""

import json
from collections import defaultdict
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

GROUPS = ("pol", "reddit", "twitter", "trolls")
UTC = timezone.utc


def write_events_fixture(root: Path, n_urls: int = 50, seed: int = 0):
    """Write a raw event file plus domain lists; return hand tallies.

    Each URL's category is fixed by construction (every third URL on a state
    host, every third on a listed news host, the rest elsewhere). Every URL
    gets a duplicate delivery and is spelled in varying case, scheme and
    trailing-slash forms, which must collapse to one sequence.
    """
    rng = np.random.default_rng(seed)
    root = Path(root)
    rows = []
    urls = defaultdict(lambda: defaultdict(int))  # category -> group -> #urls
    events = defaultdict(lambda: defaultdict(int))
    base = datetime(2017, 2, 1, tzinfo=UTC)
    for u in range(n_urls):
        kind = u % 3
        host, cat = [("RT.com", "RussianState"), ("www.bbc.com", "OtherNews"), ("blog.example.org", None)][kind]
        spellings = [f"https://{host}/story/{u}", f"HTTP://{host.upper()}/story/{u}/", f"{host}/story/{u}#top"]
        n = int(rng.integers(1, 9))
        present = set()
        for j in range(n):
            g = GROUPS[int(rng.integers(0, 4))]
            stamp = base + timedelta(days=u % 25, minutes=int(rng.integers(0, 3000)))
            row = {"url": spellings[j % 3], "group": g, "timestamp_iso8601": stamp.strftime("%Y-%m-%dT%H:%M:%SZ"),
                   "source_id": f"{u}-{j}"}
            rows.append(row)
            if j == 0:
                rows.append(dict(row, url=spellings[1]))  # repeated delivery
            present.add(g)
            for c in ([cat] if cat else []) + ["All"]:
                events[c][g] += 1
        for c in ([cat] if cat else []) + ["All"]:
            for g in present:
                urls[c][g] += 1
    rng.shuffle(rows)
    with open(root / "events.jsonl", "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(json.dumps(r) + "\n")
    (root / "state.txt").write_text("rt.com\n")
    (root / "news.txt").write_text("bbc.com\n")
    tallies = {
        "URLs": {c: {g: urls[c][g] for g in GROUPS} for c in ("RussianState", "OtherNews", "All")},
        "Events": {c: {g: events[c][g] for g in GROUPS} for c in ("RussianState", "OtherNews", "All")},
    }
    return tallies


def write_config(root: Path, **extra) -> Path:
    cfg = {"events": "events.jsonl", "state_domains": "state.txt", "news_domains": "news.txt",
           "output_dir": "out", "groups": list(GROUPS)}
    cfg.update(extra)
    path = Path(root) / "config.yaml"
    path.write_text(json.dumps(cfg, indent=1))  # JSON is valid YAML
    return path


def _tweet(uid, when, **kw):
    d = {"user_id": uid, "timestamp": when.strftime("%Y-%m-%dT%H:%M:%SZ")}
    d.update(kw)
    return d


def write_tweet_fixture(root: Path) -> dict:
    """Troll and baseline archives with planted facts; returns the planted values."""
    root = Path(root)
    trolls = []
    created_day = datetime(2016, 7, 12, tzinfo=UTC)
    start = datetime(2017, 5, 1, 14, 5, tzinfo=UTC)
    # 24 accounts created the same day; every second tweet carries #news
    for i in range(24):
        uid = str(1000 + i)
        trolls.append(_tweet(uid, start + timedelta(days=i), account_created_at=(created_day + timedelta(minutes=37 * i)).isoformat(),
                             hashtags=["#news"] if i % 2 == 0 else ["#maga"], client_name="Twitter Web Client",
                             language_code="en", screen_name_at_tweet=f"user{i}", statuses_count=100 + i,
                             followers_count=50, friends_count=40))
    # the case-study account: rename chain and a 642 -> 35 counter drop
    cs = "2000"
    chain = [("Pen_Air", 640, 1200), ("Pen_Air", 641, 3000), ("Blacks4DTrump", 642, 6000),
             ("southlonestar2", 35, 9000)]
    for k, (name, statuses, followers) in enumerate(chain):
        trolls.append(_tweet(cs, datetime(2016, 8, 1, tzinfo=UTC) + timedelta(days=30 * k),
                             account_created_at="2014-12-01T00:00:00Z",
                             hashtags=["#news"] if k % 2 == 0 else [], client_name="TweetDeck", language_code="en",
                             screen_name_at_tweet=name, statuses_count=statuses, followers_count=followers,
                             friends_count=10))
    baseline = [_tweet(str(5000 + i), start + timedelta(hours=3 * i), account_created_at="2012-01-01T00:00:00Z",
                       hashtags=["#sports"], client_name="Twitter for iPhone", language_code="en",
                       screen_name_at_tweet=f"base{i}", statuses_count=1000 + i, followers_count=5,
                       friends_count=5) for i in range(10)]
    for name, rows in (("trolls.jsonl", trolls), ("baseline.jsonl", baseline)):
        with open(root / name, "w", encoding="utf-8") as fh:
            for r in rows:
                fh.write(json.dumps(r) + "\n")
    return {
        "creation_day": "2016-07-12",
        "creations": 24,
        "min_deleted": 608,
        "rename_chain": "Pen_Air -> Blacks4DTrump -> southlonestar2",
        "renames": 2,
        "news_pct": 100.0 * (12 + 2) / 28,
        "case_user": cs,
    }
