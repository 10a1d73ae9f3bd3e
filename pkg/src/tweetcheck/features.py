"""Hand-crafted tweet/user features, z-score scaling, vector assembly, and
the feature-to-label correlation report.

Feature families, in canonical assembly order:

    TextEmbd   sentence-embedding vector of the preprocessed text
    tweettext  5 counts computed on the raw tweet text plus engagement
    tweetuser  19 author-profile features in a fixed, documented order
    FactVer    mean normalized edit distance to trusted-source titles
    Bias       calibrated offensive-language probability
"""

from __future__ import annotations

import hashlib
import math
from collections import Counter
from dataclasses import dataclass
from datetime import datetime
from typing import Mapping, Sequence

import numpy as np

from .corpus import TweetRecord, UserProfile, count_urls
from .exceptions import FeatureError, MissingFamilyError

FAMILY_ORDER = ("TextEmbd", "tweettext", "tweetuser", "FactVer", "Bias")

TEXT_FEATURE_NAMES = (
    "retweet_count",
    "favourite_count",
    "n_upper",
    "n_question",
    "n_exclaim",
)

USER_FEATURE_NAMES = (
    "chars_in_desc",
    "chars_in_real_name",
    "chars_in_user_handle",
    "num_matches",
    "total_urls_in_desc",
    "official_url_exists",
    "followers_count",
    "friends_count",
    "listed_count",
    "favourites_count",
    "geo_enabled",
    "acc_life",
    "verified",
    "num_tweet",
    "protected",
    "posting_frequency",
    "activity",
    "avg_likes_per_tweet",
    "follower_friends_ratio",
)


@dataclass(frozen=True)
class TextFeatures:
    retweet_count: int
    favourite_count: int
    n_upper: int
    n_question: int
    n_exclaim: int

    def values(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, n)) for n in TEXT_FEATURE_NAMES)


@dataclass(frozen=True)
class UserFeatures:
    chars_in_desc: int
    chars_in_real_name: int
    chars_in_user_handle: int
    num_matches: int
    total_urls_in_desc: int
    official_url_exists: int
    followers_count: int
    friends_count: int
    listed_count: int
    favourites_count: int
    geo_enabled: int
    acc_life: int
    verified: int
    num_tweet: int
    protected: int
    posting_frequency: float
    activity: int
    avg_likes_per_tweet: float
    follower_friends_ratio: float

    def values(self) -> tuple[float, ...]:
        return tuple(float(getattr(self, n)) for n in USER_FEATURE_NAMES)


def text_features_from_values(text: str, retweet_count: int = 0, favourite_count: int = 0) -> TextFeatures:
    return TextFeatures(
        retweet_count=retweet_count,
        favourite_count=favourite_count,
        n_upper=sum(1 for ch in text if ch.isupper()),
        n_question=text.count("?"),
        n_exclaim=text.count("!"),
    )


def extract_text_features(rec: TweetRecord) -> TextFeatures:
    """Counts over the RAW text (uppercase is meaningless after casefolding)."""
    return text_features_from_values(rec.text, rec.retweet_count, rec.favourite_count)


def _alnum_multiset(s: str) -> Counter:
    return Counter(ch for ch in s.casefold() if ch.isalnum())


def _floor_days(earlier: datetime, later: datetime) -> int:
    return math.floor((later - earlier).total_seconds() / 86400.0)


def extract_user_features(p: UserProfile, as_of: datetime) -> UserFeatures:
    """Compute the 19 author-profile features.

    ``as_of`` is the run's reference timestamp (never the wall clock), so
    account age and activity are reproducible. Division guards use
    max(denominator, 1) throughout.
    """
    if as_of < p.created_at:
        raise FeatureError(
            f"as_of {as_of.isoformat()} is earlier than account creation {p.created_at.isoformat()}"
        )
    acc_life = _floor_days(p.created_at, as_of)
    if p.latest_tweet_at is not None:
        activity = max(0, _floor_days(p.latest_tweet_at, as_of))
    else:
        activity = acc_life
    num_matches = sum((_alnum_multiset(p.real_name) & _alnum_multiset(p.handle)).values())
    return UserFeatures(
        chars_in_desc=len(p.description),
        chars_in_real_name=len(p.real_name),
        chars_in_user_handle=len(p.handle),
        num_matches=num_matches,
        total_urls_in_desc=count_urls(p.description),
        official_url_exists=1 if p.official_url else 0,
        followers_count=p.followers_count,
        friends_count=p.friends_count,
        listed_count=p.listed_count,
        favourites_count=p.favourites_count,
        geo_enabled=int(p.geo_enabled),
        acc_life=acc_life,
        verified=int(p.verified),
        num_tweet=p.statuses_count,
        protected=int(p.protected),
        posting_frequency=p.statuses_count / max(acc_life, 1),
        activity=activity,
        avg_likes_per_tweet=p.favourites_count / max(p.statuses_count, 1),
        follower_friends_ratio=p.followers_count / max(p.friends_count, 1),
    )


def layout_hash(layout: Sequence[str]) -> str:
    """Stable 16-hex digest of a feature layout."""
    return hashlib.sha256("\x1f".join(layout).encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class FeatureVector:
    """Named, ordered float vector. No NaN or infinity permitted."""

    layout: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.layout) != len(self.values):
            raise FeatureError(
                f"layout has {len(self.layout)} names but {len(self.values)} values"
            )
        for name, v in zip(self.layout, self.values):
            if not math.isfinite(v):
                raise FeatureError(f"non-finite value for feature {name!r}: {v!r}")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    @property
    def hash(self) -> str:
        return layout_hash(self.layout)


def _family_names(family: str, width: int) -> tuple[str, ...]:
    if family == "TextEmbd":
        return tuple(f"TextEmbd[{i}]" for i in range(width))
    if family == "tweettext":
        if width != len(TEXT_FEATURE_NAMES):
            raise FeatureError(f"tweettext expects {len(TEXT_FEATURE_NAMES)} values, got {width}")
        return tuple(f"tweettext.{n}" for n in TEXT_FEATURE_NAMES)
    if family == "tweetuser":
        if width != len(USER_FEATURE_NAMES):
            raise FeatureError(f"tweetuser expects {len(USER_FEATURE_NAMES)} values, got {width}")
        return tuple(f"tweetuser.{n}" for n in USER_FEATURE_NAMES)
    if family == "FactVer":
        if width != 1:
            raise FeatureError(f"FactVer expects 1 value, got {width}")
        return ("FactVer.score",)
    if family == "Bias":
        if width != 1:
            raise FeatureError(f"Bias expects 1 value, got {width}")
        return ("Bias.score",)
    raise FeatureError(f"unknown feature family {family!r}")


def assemble_feature_vector(
    parts: Mapping[str, Sequence[float]],
    families: Sequence[str] | None = None,
) -> FeatureVector:
    """Concatenate family values in canonical order into one named vector.

    ``families`` selects which families are required; by default every family
    present in ``parts`` is used. A requested family absent from ``parts``
    raises :class:`MissingFamilyError`.
    """
    wanted = tuple(families) if families is not None else tuple(
        f for f in FAMILY_ORDER if f in parts
    )
    for family in wanted:
        if family not in FAMILY_ORDER:
            raise FeatureError(f"unknown feature family {family!r}")
        if family not in parts:
            raise MissingFamilyError(family)
    names: list[str] = []
    values: list[float] = []
    for family in FAMILY_ORDER:
        if family not in wanted:
            continue
        vals = [float(v) for v in parts[family]]
        names.extend(_family_names(family, len(vals)))
        values.extend(vals)
    return FeatureVector(tuple(names), tuple(values))


@dataclass(frozen=True)
class Scaler:
    """Per-column z-score parameters fitted on a training matrix.

    Constant columns are flagged and passed through unchanged by
    :func:`apply_scaler`.
    """

    mean: tuple[float, ...]
    std: tuple[float, ...]
    constant: tuple[bool, ...]

    def __len__(self) -> int:
        return len(self.mean)

    def to_dict(self) -> dict:
        return {
            "mean": list(self.mean),
            "std": list(self.std),
            "constant": list(self.constant),
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "Scaler":
        return cls(
            mean=tuple(float(v) for v in raw["mean"]),
            std=tuple(float(v) for v in raw["std"]),
            constant=tuple(bool(v) for v in raw["constant"]),
        )


def fit_scaler(train_matrix: np.ndarray) -> Scaler:
    X = np.asarray(train_matrix, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise FeatureError("scaler must be fitted on a non-empty 2-D matrix")
    if not np.all(np.isfinite(X)):
        raise FeatureError("training matrix contains non-finite values")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    constant = std == 0.0
    return Scaler(tuple(mean.tolist()), tuple(std.tolist()), tuple(bool(c) for c in constant))


def scale_matrix(s: Scaler, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] != len(s):
        raise FeatureError(f"scaler has {len(s)} columns, matrix has {X.shape[1]}")
    mean = np.asarray(s.mean)
    std = np.where(np.asarray(s.constant), 1.0, np.asarray(s.std))
    out = (X - mean) / std
    # Constant columns pass through unscaled.
    const = np.asarray(s.constant)
    if const.any():
        out[:, const] = X[:, const]
    return out


def apply_scaler(s: Scaler, v: FeatureVector) -> FeatureVector:
    if len(v) != len(s):
        raise FeatureError(f"scaler has {len(s)} columns, vector has {len(v)}")
    scaled = scale_matrix(s, v.array.reshape(1, -1))[0]
    return FeatureVector(v.layout, tuple(scaled.tolist()))


@dataclass(frozen=True)
class CorrelationEntry:
    name: str
    coefficient: float
    constant: bool


@dataclass(frozen=True)
class CorrelationReport:
    entries: tuple[CorrelationEntry, ...]

    def render_table(self) -> str:
        width = max((len(e.name) for e in self.entries), default=7)
        lines = [f"{'feature'.ljust(width)}\tcoefficient"]
        for e in self.entries:
            flag = "  (constant)" if e.constant else ""
            lines.append(f"{e.name.ljust(width)}\t{e.coefficient:+.4f}{flag}")
        return "\n".join(lines)


def feature_label_correlation(
    matrix: np.ndarray,
    labels: Sequence[int],
    names: Sequence[str] | None = None,
) -> CorrelationReport:
    """Point-biserial (Pearson against the binary label) per feature column.

    Constant features are reported as 0.0 with a flag. Requires both label
    values to be present.
    """
    X = np.asarray(matrix, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] < 2:
        raise FeatureError("matrix rows and labels must align, with at least 2 rows")
    if np.all(y == y[0]):
        raise FeatureError("labels are all identical; correlation undefined")
    if names is None:
        names = [f"f{i}" for i in range(X.shape[1])]
    elif len(names) != X.shape[1]:
        raise FeatureError("names length must match matrix columns")

    y_centered = y - y.mean()
    y_norm = math.sqrt(float(y_centered @ y_centered))
    entries = []
    for j, name in enumerate(names):
        col = X[:, j]
        col_centered = col - col.mean()
        col_norm = math.sqrt(float(col_centered @ col_centered))
        if col_norm == 0.0:
            entries.append(CorrelationEntry(name, 0.0, True))
            continue
        r = float(col_centered @ y_centered) / (col_norm * y_norm)
        entries.append(CorrelationEntry(name, max(-1.0, min(1.0, r)), False))
    return CorrelationReport(tuple(entries))
