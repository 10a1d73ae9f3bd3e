"""Deterministic synthetic trilingual fixture data.

Builds a three-language dataset with label-conditioned Gaussian "embeddings":
fake and non-fake rows sit on opposite sides of one shared direction, with a
small per-language offset, so the classes are linearly separable across
languages by construction. Useful for end-to-end runs without any real
encoder or scraped data.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np

from .corpus import Dataset, TweetRecord, UserProfile
from .embeddings import EmbeddingStore

_EPOCH = datetime(2020, 1, 1, tzinfo=timezone.utc)

_TOKENS = {
    "en": ["virus", "cure", "lockdown", "doctors", "report", "cases", "mask", "city", "water", "study"],
    "hi": ["वायरस", "इलाज", "लॉकडाउन", "डॉक्टर", "रिपोर्ट", "मामले", "मास्क", "शहर", "पानी", "अध्ययन"],
    "bn": ["ভাইরাস", "চিকিৎসা", "লকডাউন", "ডাক্তার", "রিপোর্ট", "কেস", "মাস্ক", "শহর", "পানি", "গবেষণা"],
}
_EXTRAS = ["#covid19", "#health", "@newsdesk", "https://t.co/abc123", "!!", "??"]


def _make_text(rng: np.random.Generator, lang: str) -> str:
    pool = _TOKENS[lang]
    n = int(rng.integers(5, 9))
    words = [pool[int(rng.integers(0, len(pool)))] for _ in range(n)]
    if rng.random() < 0.4:
        words.append(_EXTRAS[int(rng.integers(0, len(_EXTRAS)))])
    return " ".join(words)


def _make_user(rng: np.random.Generator, rec_id: str) -> UserProfile:
    created = _EPOCH - timedelta(days=int(rng.integers(30, 2000)))
    statuses = int(rng.integers(10, 5000))
    return UserProfile(
        handle=f"user_{rec_id}",
        real_name=f"User {rec_id}",
        description="updates and news" if rng.random() < 0.5 else "",
        official_url="https://example.org" if rng.random() < 0.3 else None,
        followers_count=int(rng.integers(0, 10000)),
        friends_count=int(rng.integers(0, 2000)),
        listed_count=int(rng.integers(0, 50)),
        favourites_count=int(rng.integers(0, 20000)),
        statuses_count=statuses,
        geo_enabled=bool(rng.random() < 0.4),
        verified=bool(rng.random() < 0.1),
        protected=bool(rng.random() < 0.05),
        created_at=created,
        latest_tweet_at=created + timedelta(days=int(rng.integers(1, 25))),
    )


def make_synthetic(
    langs: tuple[str, ...] = ("en", "hi", "bn"),
    rows_per_lang: int = 100,
    dim: int = 16,
    seed: int = 7,
    with_users: bool = True,
) -> tuple[Dataset, EmbeddingStore]:
    """Dataset of ``rows_per_lang`` per language (half fake) plus embeddings."""
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=dim)
    direction /= np.linalg.norm(direction)
    lang_offsets = {lang: rng.normal(scale=0.15, size=dim) for lang in langs}

    records: list[TweetRecord] = []
    vectors: dict[str, np.ndarray] = {}
    for lang in langs:
        for i in range(rows_per_lang):
            label = i % 2
            rec_id = f"{lang}-{i:04d}"
            vec = (
                (1.0 if label == 1 else -1.0) * direction
                + lang_offsets[lang]
                + rng.normal(scale=0.35, size=dim)
            )
            vectors[rec_id] = vec
            records.append(
                TweetRecord(
                    id=rec_id,
                    text=_make_text(rng, lang),
                    lang=lang,
                    label=label,
                    retweet_count=int(rng.integers(0, 500)),
                    favourite_count=int(rng.integers(0, 900)),
                    user=_make_user(rng, rec_id) if with_users else None,
                )
            )
    ds = Dataset(tuple(records))
    store = EmbeddingStore(dim=dim, model_id=f"synthetic-gaussian-{dim}d", vectors=vectors)
    return ds, store
