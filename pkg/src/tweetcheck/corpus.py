"""Dataset loading, validation, text preprocessing, and stratified splitting.

Dataset files are UTF-8, line-delimited JSON. Every line is one tweet record;
the first line must carry the schema version field (the writer stamps it on
every line). Required keys: ``id``, ``text``, ``lang``, ``label``. Optional:
``retweet_count``, ``favourite_count``, ``source``, ``origin_id``, ``user``.
"""

from __future__ import annotations

import json
import math
import random
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping

from .exceptions import DatasetError, SchemaVersionError, SplitError

SCHEMA_VERSION = "tweets-v1"
DEFAULT_LANGS = frozenset({"en", "hi", "bn"})
SOURCES = ("original", "translated")

# Conservative URL patterns: a scheme anywhere in a token, or a token that
# starts with "www." — anything broader starts eating non-Latin text.
_SCHEME_URL_RE = re.compile(r"https?://\S*", re.IGNORECASE)
_WWW_URL_RE = re.compile(r"(?:(?<=\s)|^)www\.\S+", re.IGNORECASE)
_TAG_RE = re.compile(r"(?:(?<=\s)|^)[#@]\S+")
_WS_RE = re.compile(r"\s+")


def preprocess_text(raw: str) -> str:
    """Strip hashtags, user tags, and URLs; casefold; collapse whitespace.

    Tag tokens are removed before URL substrings so that a hashtagged link
    ("#http://x") disappears entirely. Idempotent: applying twice gives the
    same result. May return an empty string.
    """
    text = _TAG_RE.sub(" ", raw)
    text = _SCHEME_URL_RE.sub(" ", text)
    text = _WWW_URL_RE.sub(" ", text)
    text = text.casefold()
    return _WS_RE.sub(" ", text).strip()


def count_urls(text: str) -> int:
    """Number of URL-pattern matches (scheme or www.-prefixed) in ``text``."""
    return len(_SCHEME_URL_RE.findall(text)) + len(_WWW_URL_RE.findall(text))


def parse_utc(value: str, what: str) -> datetime:
    try:
        ts = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except (ValueError, AttributeError, TypeError):
        raise ValueError(f"{what} is not an ISO-8601 timestamp: {value!r}")
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


@dataclass(frozen=True)
class UserProfile:
    """Author profile as captured at collection time."""

    handle: str
    real_name: str = ""
    description: str = ""
    official_url: str | None = None
    followers_count: int = 0
    friends_count: int = 0
    listed_count: int = 0
    favourites_count: int = 0
    statuses_count: int = 0
    geo_enabled: bool = False
    verified: bool = False
    protected: bool = False
    created_at: datetime = datetime(2000, 1, 1, tzinfo=timezone.utc)
    latest_tweet_at: datetime | None = None

    _COUNT_FIELDS = (
        "followers_count",
        "friends_count",
        "listed_count",
        "favourites_count",
        "statuses_count",
    )

    def __post_init__(self):
        for name in self._COUNT_FIELDS:
            if getattr(self, name) < 0:
                raise ValueError(f"user {name} must be >= 0")
        if self.latest_tweet_at is not None and self.created_at > self.latest_tweet_at:
            raise ValueError("user created_at is after latest_tweet_at")

    def to_dict(self) -> dict:
        out = {
            "handle": self.handle,
            "real_name": self.real_name,
            "description": self.description,
            "followers_count": self.followers_count,
            "friends_count": self.friends_count,
            "listed_count": self.listed_count,
            "favourites_count": self.favourites_count,
            "statuses_count": self.statuses_count,
            "geo_enabled": self.geo_enabled,
            "verified": self.verified,
            "protected": self.protected,
            "created_at": self.created_at.isoformat(),
        }
        if self.official_url is not None:
            out["official_url"] = self.official_url
        if self.latest_tweet_at is not None:
            out["latest_tweet_at"] = self.latest_tweet_at.isoformat()
        return out

    @classmethod
    def from_dict(cls, raw: Mapping) -> "UserProfile":
        known = {
            "handle",
            "real_name",
            "description",
            "official_url",
            "geo_enabled",
            "verified",
            "protected",
        }
        kwargs: dict = {k: raw[k] for k in known if k in raw}
        for name in cls._COUNT_FIELDS:
            if name in raw:
                value = raw[name]
                if not isinstance(value, int) or isinstance(value, bool):
                    raise ValueError(f"user {name} must be an integer")
                kwargs[name] = value
        for flag in ("geo_enabled", "verified", "protected"):
            if flag in kwargs and not isinstance(kwargs[flag], bool):
                raise ValueError(f"user {flag} must be a boolean")
        if "handle" not in kwargs or not isinstance(kwargs["handle"], str) or not kwargs["handle"]:
            raise ValueError("user handle missing or empty")
        if "created_at" in raw:
            kwargs["created_at"] = parse_utc(raw["created_at"], "user created_at")
        if "latest_tweet_at" in raw and raw["latest_tweet_at"] is not None:
            kwargs["latest_tweet_at"] = parse_utc(raw["latest_tweet_at"], "user latest_tweet_at")
        return cls(**kwargs)


@dataclass(frozen=True)
class TweetRecord:
    """One tweet: text, language, binary label (fake=1), and engagement."""

    id: str
    text: str
    lang: str
    label: int
    retweet_count: int = 0
    favourite_count: int = 0
    user: UserProfile | None = None
    source: str = "original"
    origin_id: str | None = None

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if self.retweet_count < 0 or self.favourite_count < 0:
            raise ValueError("engagement counts must be >= 0")
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")
        if not unicodedata.normalize("NFC", self.text).strip():
            raise ValueError("text is empty after Unicode normalization")

    @property
    def origin_key(self) -> str:
        """Grouping key tying translated rows to their source tweet."""
        return self.origin_id or self.id

    def to_dict(self) -> dict:
        out = {
            "schema": SCHEMA_VERSION,
            "id": self.id,
            "text": self.text,
            "lang": self.lang,
            "label": self.label,
            "retweet_count": self.retweet_count,
            "favourite_count": self.favourite_count,
            "source": self.source,
        }
        if self.origin_id is not None:
            out["origin_id"] = self.origin_id
        if self.user is not None:
            out["user"] = self.user.to_dict()
        return out


@dataclass(frozen=True)
class Dataset:
    """Immutable, validated collection of tweet records."""

    records: tuple[TweetRecord, ...]

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            seen, dup = set(), None
            for i in ids:
                if i in seen:
                    dup = i
                    break
                seen.add(i)
            raise DatasetError(f"duplicate record id: {dup!r}")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def langs(self) -> tuple[str, ...]:
        return tuple(sorted({r.lang for r in self.records}))

    def counts(self) -> dict[str, dict[str, int]]:
        """Per-language fake/non-fake tallies."""
        out: dict[str, dict[str, int]] = {}
        for r in self.records:
            slot = out.setdefault(r.lang, {"fake": 0, "non_fake": 0})
            slot["fake" if r.label == 1 else "non_fake"] += 1
        return out

    def filter(self, langs: Iterable[str]) -> "Dataset":
        wanted = set(langs)
        return Dataset(tuple(r for r in self.records if r.lang in wanted))

    def digest(self) -> str:
        """Stable content hash over the canonical serialization."""
        import hashlib

        h = hashlib.sha256()
        for r in self.records:
            h.update(json.dumps(r.to_dict(), sort_keys=True, ensure_ascii=False).encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()[:16]


_REQUIRED_KEYS = ("id", "text", "lang", "label")


def _validate_line(raw: Mapping, lineno: int, langs: frozenset[str], problems: list[str]) -> TweetRecord | None:
    for key in _REQUIRED_KEYS:
        if key not in raw:
            problems.append(f"line {lineno}: missing field '{key}'")
            return None
    if not isinstance(raw["id"], str) or not raw["id"]:
        problems.append(f"line {lineno}: field 'id' must be a non-empty string")
        return None
    if not isinstance(raw["text"], str):
        problems.append(f"line {lineno}: field 'text' must be a string")
        return None
    if raw["lang"] not in langs:
        problems.append(f"line {lineno}: field 'lang' has unrecognized tag {raw['lang']!r}")
        return None
    if raw["label"] not in (0, 1) or isinstance(raw["label"], bool):
        problems.append(f"line {lineno}: field 'label' must be 0 or 1, got {raw['label']!r}")
        return None
    kwargs: dict = {
        "id": raw["id"],
        "text": raw["text"],
        "lang": raw["lang"],
        "label": raw["label"],
    }
    for key in ("retweet_count", "favourite_count"):
        if key in raw:
            value = raw[key]
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                problems.append(f"line {lineno}: field '{key}' must be a non-negative integer")
                return None
            kwargs[key] = value
    if "source" in raw:
        if raw["source"] not in SOURCES:
            problems.append(f"line {lineno}: field 'source' must be one of {SOURCES}")
            return None
        kwargs["source"] = raw["source"]
    if "origin_id" in raw and raw["origin_id"] is not None:
        if not isinstance(raw["origin_id"], str):
            problems.append(f"line {lineno}: field 'origin_id' must be a string")
            return None
        kwargs["origin_id"] = raw["origin_id"]
    if "user" in raw and raw["user"] is not None:
        try:
            kwargs["user"] = UserProfile.from_dict(raw["user"])
        except ValueError as exc:
            problems.append(f"line {lineno}: field 'user': {exc}")
            return None
    try:
        return TweetRecord(**kwargs)
    except ValueError as exc:
        problems.append(f"line {lineno}: {exc}")
        return None


def load_dataset(path: str | Path, schema: str = SCHEMA_VERSION, langs: frozenset[str] = DEFAULT_LANGS) -> Dataset:
    """Load and validate a line-delimited dataset file.

    All malformed lines are collected and reported together, each with its
    line number and offending field. The first line must declare the schema
    version; a mismatch raises :class:`SchemaVersionError`.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DatasetError(f"cannot read dataset file {path}: {exc}") from exc

    problems: list[str] = []
    records: list[TweetRecord] = []
    seen_ids: set[str] = set()
    first_content = True
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            problems.append(f"line {lineno}: invalid JSON ({exc.msg})")
            continue
        if not isinstance(raw, dict):
            problems.append(f"line {lineno}: record must be a JSON object")
            continue
        declared = raw.get("schema")
        if first_content:
            first_content = False
            if declared != schema:
                raise SchemaVersionError(
                    f"line {lineno}: schema version mismatch: expected {schema!r}, file declares {declared!r}"
                )
        if declared is not None and declared != schema:
            problems.append(f"line {lineno}: field 'schema' declares {declared!r}, expected {schema!r}")
            continue
        rec = _validate_line(raw, lineno, langs, problems)
        if rec is None:
            continue
        if rec.id in seen_ids:
            problems.append(f"line {lineno}: duplicate record id {rec.id!r}")
            continue
        seen_ids.add(rec.id)
        records.append(rec)

    if problems:
        raise DatasetError("dataset validation failed:\n" + "\n".join(problems))
    return Dataset(tuple(records))


def save_dataset(ds: Dataset, path: str | Path) -> None:
    """Write a dataset in the canonical line-delimited form."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for r in ds.records:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False))
            fh.write("\n")


@dataclass(frozen=True)
class SplitResult:
    """Train/test partition. Iterable as ``train, test = split_dataset(...)``.

    ``forced_groups`` lists origin groups that straddled the two partitions
    and were moved wholly into train to prevent translated-duplicate leakage.
    """

    train: Dataset
    test: Dataset
    forced_groups: tuple[str, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter((self.train, self.test))


def split_dataset(ds: Dataset, train_fraction: float, seed: int) -> SplitResult:
    """Stratified-by-(lang, label) deterministic split.

    Rounding rule: each stratum contributes floor(size * (1 - train_fraction))
    records to test; the remainder goes to train. Records sharing an origin
    key always land in the same partition (moved to train when they straddle,
    and flagged in the result).
    """
    if not 0 < train_fraction < 1:
        raise SplitError(f"train_fraction must be in (0, 1), got {train_fraction}")
    if len(ds) == 0:
        raise SplitError("cannot split an empty dataset")

    strata: dict[tuple[str, int], list[int]] = {}
    for idx, rec in enumerate(ds.records):
        strata.setdefault((rec.lang, rec.label), []).append(idx)

    for key, members in sorted(strata.items()):
        if len(members) < 2:
            raise SplitError(f"stratum (lang={key[0]}, label={key[1]}) has fewer than 2 records")

    rng = random.Random(seed)
    test_idx: set[int] = set()
    for key in sorted(strata):
        members = list(strata[key])
        rng.shuffle(members)
        # Epsilon guards the floor against binary-float noise (e.g. 50 * 0.2).
        n_test = int(math.floor(len(members) * (1.0 - train_fraction) + 1e-9))
        test_idx.update(members[:n_test])

    # Origin groups must not straddle the partition boundary.
    groups: dict[str, list[int]] = {}
    for idx, rec in enumerate(ds.records):
        groups.setdefault(rec.origin_key, []).append(idx)
    forced: list[str] = []
    for key, members in sorted(groups.items()):
        if len(members) < 2:
            continue
        in_test = [i for i in members if i in test_idx]
        if in_test and len(in_test) < len(members):
            test_idx.difference_update(members)
            forced.append(key)

    train_records = tuple(r for i, r in enumerate(ds.records) if i not in test_idx)
    test_records = tuple(r for i, r in enumerate(ds.records) if i in test_idx)
    return SplitResult(Dataset(train_records), Dataset(test_records), tuple(forced))


def convert_csv(
    in_path: str | Path,
    out_path: str | Path,
    text_col: str = "text",
    id_col: str | None = None,
    label_col: str = "label",
    lang_col: str | None = None,
    lang: str = "en",
    label_map: Mapping[str, int] | None = None,
) -> int:
    """Convert a CSV export into the line-delimited dataset format.

    ``label_map`` maps raw CSV label strings to {0, 1} (e.g. annotation
    answers like yes/no). Without it, labels must already be 0/1. Returns the
    number of records written.
    """
    import csv

    in_path, out_path = Path(in_path), Path(out_path)
    records: list[TweetRecord] = []
    with in_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for i, row in enumerate(reader, start=1):
            raw_label = row.get(label_col, "").strip()
            if label_map is not None:
                if raw_label not in label_map:
                    raise DatasetError(f"csv row {i}: unknown label value {raw_label!r}")
                label = label_map[raw_label]
            else:
                if raw_label not in ("0", "1"):
                    raise DatasetError(f"csv row {i}: unknown label value {raw_label!r}")
                label = int(raw_label)
            rec_id = row[id_col].strip() if id_col else f"row-{i:06d}"
            rec_lang = row[lang_col].strip() if lang_col else lang
            try:
                records.append(
                    TweetRecord(
                        id=rec_id,
                        text=row[text_col],
                        lang=rec_lang,
                        label=label,
                        retweet_count=int(row.get("retweet_count") or 0),
                        favourite_count=int(row.get("favourite_count") or 0),
                    )
                )
            except (ValueError, KeyError) as exc:
                raise DatasetError(f"csv row {i}: {exc}") from exc
    ds = Dataset(tuple(records))
    save_dataset(ds, out_path)
    return len(ds)
