"""URL canonicalization, offline redirect resolution and news-domain categorization."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping
from urllib.parse import urlsplit

from .exceptions import UrlParseError

__all__ = [
    "Category",
    "UrlRecord",
    "DEFAULT_STATE_DOMAINS",
    "canonicalize_url",
    "categorize_url",
    "categorize_host",
    "domain_of",
    "load_redirect_map",
    "load_domain_list",
    "normalize_domains",
]


class Category(str, Enum):
    RUSSIAN_STATE = "RussianState"
    OTHER_NEWS = "OtherNews"
    OTHER = "Other"


DEFAULT_STATE_DOMAINS = frozenset({"rt.com"})

_HOST_RE = re.compile(r"^[a-z0-9_](?:[a-z0-9_-]*[a-z0-9_])?(?:\.[a-z0-9_](?:[a-z0-9_-]*[a-z0-9_])?)*$")
_DEFAULT_PORTS = {"http": 80, "https": 443}


@dataclass(frozen=True)
class UrlRecord:
    raw: str
    canonical: str
    category: Category

    @property
    def host(self) -> str:
        return _host_of_canonical(self.canonical)


def _host_of_canonical(canonical: str) -> str:
    host = re.split(r"[/?]", canonical, maxsplit=1)[0]
    return host.split(":", 1)[0]


def _normalize(raw: str) -> str:
    if not isinstance(raw, str) or not raw.strip():
        raise UrlParseError(raw)
    text = raw.strip()
    if text.startswith("//"):
        text = "http:" + text
    elif not re.match(r"^[A-Za-z][A-Za-z0-9+.-]*://", text):
        text = "http://" + text
    try:
        parts = urlsplit(text)
        port = parts.port
    except ValueError:
        raise UrlParseError(raw) from None
    scheme = parts.scheme.lower()
    host = (parts.hostname or "").rstrip(".")
    try:
        host = host.encode("idna").decode("ascii") if not host.isascii() else host
    except UnicodeError:
        raise UrlParseError(raw) from None
    if not host or not _HOST_RE.match(host):
        raise UrlParseError(raw)
    netloc = host
    if port is not None and port != _DEFAULT_PORTS.get(scheme):
        netloc = f"{host}:{port}"
    path = parts.path.rstrip("/")
    if any(c.isspace() for c in path):
        raise UrlParseError(raw)
    query = f"?{parts.query}" if parts.query else ""
    return f"{netloc}{path}{query}"


def normalize_domains(domains: Iterable[str]) -> frozenset[str]:
    return frozenset(_host_of_canonical(_normalize(d)) for d in domains if d and d.strip())


def _matches(host: str, domains: frozenset[str]) -> bool:
    labels = host.split(".")
    return any(".".join(labels[i:]) in domains for i in range(len(labels)))


def categorize_host(host: str, state_domains=DEFAULT_STATE_DOMAINS, news_domains=frozenset()) -> Category:
    # subdomains inherit their parent's category (www.rt.com -> rt.com)
    if _matches(host, frozenset(state_domains)):
        return Category.RUSSIAN_STATE
    if _matches(host, frozenset(news_domains)):
        return Category.OTHER_NEWS
    return Category.OTHER


def categorize_url(record: UrlRecord, state_domains=DEFAULT_STATE_DOMAINS, news_domains=frozenset()) -> Category:
    """State-sponsored domains take precedence over the general news list."""
    return categorize_host(record.host, state_domains, news_domains)


def canonicalize_url(
    raw: str,
    redirect_map: Mapping[str, str] | None = None,
    state_domains=DEFAULT_STATE_DOMAINS,
    news_domains=frozenset(),
) -> UrlRecord:
    """Canonicalize ``raw`` and assign its news category.

    The canonical form drops the scheme, fragment, user info, default port
    and trailing slashes, and lowercases the host. ``redirect_map`` keys are
    canonical URLs or bare hosts; a hit on either replaces ``raw`` with the
    mapped target (one hop, no chaining).
    """
    canonical = _normalize(raw)
    if redirect_map:
        target = redirect_map.get(canonical)
        if target is None:
            target = redirect_map.get(_host_of_canonical(canonical))
        if target is not None:
            canonical = _normalize(target)
    category = categorize_host(_host_of_canonical(canonical), state_domains, news_domains)
    return UrlRecord(raw=raw, canonical=canonical, category=category)


def domain_of(raw: str, redirect_map: Mapping[str, str] | None = None) -> str:
    """Host of a URL with a leading ``www.`` removed, for domain tabulations."""
    host = canonicalize_url(raw, redirect_map).host
    return host[4:] if host.startswith("www.") else host


def load_redirect_map(path) -> dict[str, str]:
    """Read a two-column (source, target) file; tab, comma or whitespace separated."""
    mapping: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" in line:
            cols = line.split("\t")
        elif "," in line:
            cols = next(csv.reader([line]))
        else:
            cols = line.split()
        if len(cols) != 2:
            raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(cols)}")
        mapping[_normalize(cols[0].strip())] = cols[1].strip()
    return mapping


def load_domain_list(path) -> frozenset[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return normalize_domains(ln.strip() for ln in lines if ln.strip() and not ln.startswith("#"))
