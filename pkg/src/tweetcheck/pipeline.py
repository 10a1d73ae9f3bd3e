"""Feature-to-verdict composition shared by the harness, CLI, and service.

A trained pipeline is persisted as a single bundle file: classifier, fitted
scaler, feature-family set, layout, and the run's reference timestamp. At
request time the bundle is combined with live resources (an embedder, a
trusted index, a bias model) to classify free text.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import biaser as biaser_mod
from .biaser import BiasModel, bias_score
from .classifiers import TrainedModel, _deserialize, _serialize
from .corpus import UserProfile, preprocess_text
from .embeddings import EmbeddingProviderClient, EmbeddingStore, fetch_embeddings
from .exceptions import (
    ConfigError,
    EmbeddingError,
    EmptyTextError,
    MissingFamilyError,
    ModelError,
)
from .factver import TrustedIndex, factver_score
from .features import (
    Scaler,
    apply_scaler,
    assemble_feature_vector,
    extract_user_features,
    text_features_from_values,
)

BUNDLE_FORMAT = "tweetcheck-bundle"
BUNDLE_VERSION = 1

BIAS_FALLBACK_FLAG = "bias_neutral_fallback"


def compute_parts(
    families: Sequence[str],
    *,
    raw_text: str,
    clean_text: str,
    retweet_count: int = 0,
    favourite_count: int = 0,
    user: UserProfile | None = None,
    embedding: np.ndarray | None = None,
    index: TrustedIndex | None = None,
    bias_model: BiasModel | None = None,
    as_of: datetime,
    factver_k: int = 10,
) -> tuple[dict[str, list[float]], tuple[str, ...], list[str]]:
    """Per-record family values. Returns (parts, factver titles, flags).

    The Bias family falls back to the neutral 0.5 when no model is
    configured (flagged); every other family errors when its input is
    missing.
    """
    parts: dict[str, list[float]] = {}
    titles: tuple[str, ...] = ()
    flags: list[str] = []
    for family in families:
        if family == "TextEmbd":
            if embedding is None:
                raise EmbeddingError("no embedding available for this text")
            parts[family] = [float(v) for v in np.asarray(embedding, dtype=np.float64)]
        elif family == "tweettext":
            tf = text_features_from_values(raw_text, retweet_count, favourite_count)
            parts[family] = list(tf.values())
        elif family == "tweetuser":
            if user is None:
                raise MissingFamilyError("tweetuser", "missing feature family: tweetuser (no user profile)")
            parts[family] = list(extract_user_features(user, as_of).values())
        elif family == "FactVer":
            if index is None:
                raise ConfigError("FactVer family selected but no trusted index configured")
            fv = factver_score(clean_text, index, factver_k)
            parts[family] = [fv.score]
            titles = fv.matched_titles
        elif family == "Bias":
            if bias_model is None:
                parts[family] = [biaser_mod.NEUTRAL_BIAS]
                if BIAS_FALLBACK_FLAG not in flags:
                    flags.append(BIAS_FALLBACK_FLAG)
            else:
                parts[family] = [bias_score(bias_model, raw_text)]
        else:
            raise ConfigError(f"unknown feature family {family!r}")
    return parts, titles, flags


@dataclass(frozen=True)
class Bundle:
    """Serializable (model, scaler, layout, run parameters) unit."""

    model: TrainedModel
    scaler: Scaler
    families: tuple[str, ...]
    layout: tuple[str, ...]
    as_of: datetime
    factver_k: int = 10

    def to_payload(self) -> dict:
        return {
            "format": BUNDLE_FORMAT,
            "version": BUNDLE_VERSION,
            "model": _serialize(self.model),
            "scaler": self.scaler.to_dict(),
            "families": list(self.families),
            "layout": list(self.layout),
            "as_of": self.as_of.isoformat(),
            "factver_k": self.factver_k,
        }

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.to_payload(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @property
    def dim(self) -> int | None:
        if "TextEmbd" not in self.families:
            return None
        return sum(1 for name in self.layout if name.startswith("TextEmbd["))


def save_bundle(bundle: Bundle, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(bundle.to_payload(), sort_keys=True, ensure_ascii=False),
        encoding="utf-8",
    )


def load_bundle(path: str | Path) -> Bundle:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"corrupt bundle file {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != BUNDLE_FORMAT:
        raise ModelError(f"not a bundle file: {path}")
    if payload.get("version", 0) > BUNDLE_VERSION:
        raise ModelError(
            f"bundle version {payload.get('version')} is newer than supported {BUNDLE_VERSION}"
        )
    try:
        return Bundle(
            model=_deserialize(payload["model"]),
            scaler=Scaler.from_dict(payload["scaler"]),
            families=tuple(payload["families"]),
            layout=tuple(payload["layout"]),
            as_of=datetime.fromisoformat(payload["as_of"]).astimezone(timezone.utc),
            factver_k=payload.get("factver_k", 10),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"corrupt bundle file {path}: {exc}") from exc


def text_key(clean_text: str) -> str:
    """Store key for request-time lookup of a text's embedding."""
    return "text:" + hashlib.sha256(clean_text.encode("utf-8")).hexdigest()[:24]


def store_embedder(store: EmbeddingStore) -> Callable[[str], np.ndarray]:
    """Embedder resolving preprocessed text via content-hash ids in a store."""

    def embed(clean_text: str) -> np.ndarray:
        key = text_key(clean_text)
        if key in store:
            return store.get(key)
        raise EmbeddingError(f"embedding store has no vector for key {key!r}")

    return embed


def provider_embedder(client: EmbeddingProviderClient) -> Callable[[str], np.ndarray]:
    def embed(clean_text: str) -> np.ndarray:
        return fetch_embeddings(client, [clean_text])[0]

    return embed


@dataclass(frozen=True)
class Verdict:
    label: str
    p_fake: float
    feature_breakdown: Mapping[str, float]
    factver_titles: tuple[str, ...]
    model_fingerprint: str

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "p_fake": self.p_fake,
            "feature_breakdown": dict(self.feature_breakdown),
            "factver_titles": list(self.factver_titles),
            "model_fingerprint": self.model_fingerprint,
        }


@dataclass(frozen=True)
class Pipeline:
    """Loaded bundle plus the live resources needed to serve predictions."""

    bundle: Bundle
    embedder: Callable[[str], np.ndarray] | None = None
    index: TrustedIndex | None = None
    bias_model: BiasModel | None = None
    extra_flags: tuple[str, ...] = field(default_factory=tuple)

    def classify(
        self,
        text: str,
        user: UserProfile | None = None,
        lang: str | None = None,
        retweet_count: int = 0,
        favourite_count: int = 0,
    ) -> Verdict:
        """Full feature assembly honoring the bundle's trained family set.

        Families the request cannot feed raise their documented errors
        (missing user profile -> :class:`MissingFamilyError`, unreachable
        embeddings -> :class:`EmbeddingError`).
        """
        del lang  # accepted for API symmetry; features are language-agnostic
        clean = preprocess_text(text)
        if not clean:
            raise EmptyTextError("empty input: nothing left after preprocessing")
        embedding = None
        if "TextEmbd" in self.bundle.families:
            if self.embedder is None:
                raise ConfigError("model requires TextEmbd but no embedder is configured")
            embedding = self.embedder(clean)
        parts, titles, _ = compute_parts(
            self.bundle.families,
            raw_text=text,
            clean_text=clean,
            retweet_count=retweet_count,
            favourite_count=favourite_count,
            user=user,
            embedding=embedding,
            index=self.index,
            bias_model=self.bias_model,
            as_of=self.bundle.as_of,
            factver_k=self.bundle.factver_k,
        )
        fv = assemble_feature_vector(parts, self.bundle.families)
        if fv.layout != self.bundle.layout:
            raise ModelError("assembled feature layout differs from the trained layout")
        scaled = apply_scaler(self.bundle.scaler, fv)
        probs = self.bundle.model.predict_proba(scaled)
        label = "fake" if probs[1] > probs[0] else "non_fake"
        breakdown: dict[str, float] = {
            name: value
            for name, value in zip(fv.layout, fv.values)
            if not name.startswith("TextEmbd[")
        }
        if embedding is not None:
            breakdown["TextEmbd.dim"] = float(len(embedding))
        return Verdict(
            label=label,
            p_fake=float(probs[1]),
            feature_breakdown=breakdown,
            factver_titles=titles,
            model_fingerprint=self.bundle.fingerprint,
        )
