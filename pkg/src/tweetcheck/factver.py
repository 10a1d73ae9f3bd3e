"""Fact-verification score: mean normalized edit distance between a tweet and
titles retrieved from an allowlisted trusted-source index.

A lower score means the text is better corroborated by trusted titles. When
nothing relevant can be retrieved the score is pinned to 1.0 (no
corroboration is treated as maximal distance).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence
from urllib.parse import urlsplit

from .exceptions import DatasetError
from .exceptions import TweetcheckError


def levenshtein(a: str, b: str) -> int:
    """Minimal insert/delete/substitute edits between two strings.

    Operates on Unicode code points. Two-row dynamic program, O(len(a) *
    len(b)) time and O(min) space.
    """
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        curr = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            curr[j] = min(prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + cost)
        prev = curr
    return prev[-1]


def normalized_distance(a: str, b: str) -> float:
    """levenshtein(a, b) / max(|a|, |b|); two empty strings give 0.0."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def _registrable(host: str | None) -> str:
    if not host:
        return ""
    host = host.lower().rstrip(".")
    return host[4:] if host.startswith("www.") else host


def _domain_allowed(url: str, allowlist: frozenset[str]) -> bool:
    host = _registrable(urlsplit(url).hostname)
    if not host:
        return False
    return any(host == d or host.endswith("." + d) for d in allowlist)


@dataclass(frozen=True)
class TrustedDoc:
    title: str
    url: str


@dataclass(frozen=True)
class TrustedIndex:
    """Titles from allowlisted domains, searchable by token overlap."""

    documents: tuple[TrustedDoc, ...]
    allowlist: frozenset[str]
    dropped: int = 0

    @classmethod
    def build(cls, docs: Iterable[TrustedDoc], allowlist: Iterable[str]) -> "TrustedIndex":
        allowed = frozenset(d.strip().lower().lstrip(".") for d in allowlist if d.strip())
        kept, dropped = [], 0
        for doc in docs:
            if not doc.title.strip():
                raise DatasetError(f"trusted document with empty title (url={doc.url!r})")
            if _domain_allowed(doc.url, allowed):
                kept.append(doc)
            else:
                dropped += 1
        return cls(tuple(kept), allowed, dropped)

    def __len__(self) -> int:
        return len(self.documents)

    def retrieve(self, query: str, k: int) -> list[str]:
        return retrieve_titles(query, self, k)


def load_index(index_path: str | Path, allowlist_path: str | Path) -> TrustedIndex:
    """Load a line-delimited {title, url} file filtered by a one-domain-per-line
    allowlist (blank lines and # comments skipped)."""
    allow_lines = Path(allowlist_path).read_text(encoding="utf-8").splitlines()
    allowlist = [ln.strip() for ln in allow_lines if ln.strip() and not ln.strip().startswith("#")]
    docs = []
    for lineno, line in enumerate(Path(index_path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"index line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(raw, dict) or "title" not in raw or "url" not in raw:
            raise DatasetError(f"index line {lineno}: record needs 'title' and 'url'")
        docs.append(TrustedDoc(title=str(raw["title"]), url=str(raw["url"])))
    return TrustedIndex.build(docs, allowlist)


def _tokens(text: str) -> frozenset[str]:
    return frozenset(text.split())


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a or not b:
        return 0.0
    inter = len(a & b)
    if inter == 0:
        return 0.0
    return inter / len(a | b)


def retrieve_titles(query: str, idx: TrustedIndex, k: int) -> list[str]:
    """Top-k titles by token-set Jaccard similarity to the preprocessed query.

    Documents sharing no token with the query are never retrieved; ties break
    by index order.
    """
    if k < 1:
        raise TweetcheckError(f"k must be >= 1, got {k}")
    q = _tokens(query)
    scored = []
    for pos, doc in enumerate(idx.documents):
        sim = _jaccard(q, _tokens(doc.title.casefold()))
        if sim > 0.0:
            scored.append((-sim, pos))
    scored.sort()
    return [idx.documents[pos].title for _, pos in scored[:k]]


@dataclass(frozen=True)
class FactVerScore:
    score: float
    k_used: int
    matched_titles: tuple[str, ...]


def factver_score(text: str, idx: TrustedIndex, k: int = 10) -> FactVerScore:
    """Mean normalized distance between ``text`` and its top-k retrieved titles.

    ``text`` is expected to be preprocessed already (it is both the retrieval
    query and the distance operand); titles are casefolded before comparison
    so the distance is case-insensitive. No retrieved titles -> score 1.0.
    """
    titles = retrieve_titles(text, idx, k)
    if not titles:
        return FactVerScore(score=1.0, k_used=0, matched_titles=())
    distances = [normalized_distance(text, t.casefold()) for t in titles]
    return FactVerScore(
        score=sum(distances) / len(distances),
        k_used=len(titles),
        matched_titles=tuple(titles),
    )
