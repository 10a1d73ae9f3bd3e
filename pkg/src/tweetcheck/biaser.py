"""Bias score: calibrated probability that a tweet contains offensive language.

A linear hinge-loss classifier over TF-IDF n-gram features (word 1-2 grams
plus character 3-5 grams of the preprocessed text), trained by deterministic
subgradient descent and calibrated with Platt scaling. TF-IDF rows are NOT
length-normalized: with raw counts a positive-weight n-gram can only push the
margin up, which keeps the score monotone in its count.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .calibration import apply_platt, fit_platt
from .corpus import preprocess_text
from .exceptions import ModelError

BIAS_FORMAT = "tweetcheck-bias"
BIAS_VERSION = 1

NEUTRAL_BIAS = 0.5  # engine-level fallback when no model is configured


@dataclass(frozen=True)
class BiasConfig:
    word_ngrams: tuple[int, int] = (1, 2)
    char_ngrams: tuple[int, int] = (3, 5)
    epochs: int = 50
    c: float = 1.0
    seed: int = 0

    def fingerprint(self) -> str:
        blob = json.dumps(
            {
                "word_ngrams": list(self.word_ngrams),
                "char_ngrams": list(self.char_ngrams),
                "epochs": self.epochs,
                "c": self.c,
                "seed": self.seed,
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def text_ngrams(text: str, cfg: BiasConfig) -> Counter:
    """N-gram multiset of the preprocessed text.

    Word n-grams are prefixed "w:", character n-grams (spaces included)
    "c:". Prefixes keep the two spaces from colliding in one vocabulary.
    """
    clean = preprocess_text(text)
    grams: Counter = Counter()
    tokens = clean.split()
    lo, hi = cfg.word_ngrams
    for n in range(lo, hi + 1):
        for i in range(len(tokens) - n + 1):
            grams["w:" + " ".join(tokens[i : i + n])] += 1
    lo, hi = cfg.char_ngrams
    for n in range(lo, hi + 1):
        for i in range(len(clean) - n + 1):
            grams["c:" + clean[i : i + n]] += 1
    return grams


@dataclass(frozen=True)
class BiasModel:
    vocabulary: Mapping[str, int]
    idf: np.ndarray
    weights: np.ndarray
    intercept: float
    platt_a: float
    platt_b: float
    config: BiasConfig = field(default_factory=BiasConfig)

    def _vector(self, text: str) -> tuple[list[int], list[float]]:
        grams = text_ngrams(text, self.config)
        idx, data = [], []
        for g, count in grams.items():
            j = self.vocabulary.get(g)
            if j is not None:
                idx.append(j)
                data.append(count * float(self.idf[j]))
        return idx, data


def train_bias_model(
    corpus: Sequence[tuple[str, int]],
    seed: int = 0,
    config: BiasConfig | None = None,
) -> BiasModel:
    """Train from (text, offensive in {0,1}) pairs; deterministic under a seed.

    Requires at least one example of each class. The linear model is
    L2-regularized hinge loss minimized by per-sample subgradient steps with
    decaying rate 1/(lambda * t); Platt scaling is then fitted on the
    training margins.
    """
    base = config or BiasConfig()
    cfg = BiasConfig(
        word_ngrams=base.word_ngrams,
        char_ngrams=base.char_ngrams,
        epochs=base.epochs,
        c=base.c,
        seed=seed,
    )
    labels = [y for _, y in corpus]
    if any(y not in (0, 1) for y in labels):
        raise ModelError("bias labels must be 0 or 1")
    if len(set(labels)) < 2:
        raise ModelError("bias training corpus must contain both classes")

    grams_per_doc = [text_ngrams(text, cfg) for text, _ in corpus]
    df: Counter = Counter()
    for grams in grams_per_doc:
        df.update(grams.keys())
    vocab = {g: j for j, g in enumerate(sorted(df))}
    n_docs = len(corpus)
    idf = np.zeros(len(vocab), dtype=np.float64)
    for g, j in vocab.items():
        idf[j] = math.log((1.0 + n_docs) / (1.0 + df[g])) + 1.0

    rows: list[tuple[np.ndarray, np.ndarray]] = []
    for grams in grams_per_doc:
        idx = np.array([vocab[g] for g in grams], dtype=np.int64)
        data = np.array([grams[g] * idf[vocab[g]] for g in grams], dtype=np.float64)
        rows.append((idx, data))

    y = np.where(np.array(labels) == 1, 1.0, -1.0)
    w = np.zeros(len(vocab), dtype=np.float64)
    b = 0.0
    lam = 1.0 / (cfg.c * n_docs)
    rng = np.random.default_rng(seed)
    t = 0
    for _ in range(cfg.epochs):
        for i in rng.permutation(n_docs):
            t += 1
            eta = 1.0 / (lam * t)
            idx, data = rows[i]
            margin = y[i] * (float(w[idx] @ data) + b)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w[idx] += eta * y[i] * data
                b += eta * y[i]

    margins = [float(w[idx] @ data) + b for idx, data in rows]
    a, pb = fit_platt(margins, labels)
    return BiasModel(
        vocabulary=vocab,
        idf=idf,
        weights=w,
        intercept=b,
        platt_a=a,
        platt_b=pb,
        config=cfg,
    )


def bias_score(m: BiasModel, text: str) -> float:
    """Calibrated offensive-language probability, strictly inside (0, 1).

    Text with no in-vocabulary n-grams maps through the intercept alone.
    """
    idx, data = m._vector(text)
    margin = m.intercept
    if idx:
        margin += float(m.weights[np.array(idx)] @ np.array(data))
    return apply_platt(m.platt_a, m.platt_b, margin)


def save_bias_model(m: BiasModel, path: str | Path) -> None:
    payload = {
        "format": BIAS_FORMAT,
        "version": BIAS_VERSION,
        "config": {
            "word_ngrams": list(m.config.word_ngrams),
            "char_ngrams": list(m.config.char_ngrams),
            "epochs": m.config.epochs,
            "c": m.config.c,
            "seed": m.config.seed,
        },
        "config_hash": m.config.fingerprint(),
        "vocabulary": dict(sorted(m.vocabulary.items(), key=lambda kv: kv[1])),
        "idf": m.idf.tolist(),
        "weights": m.weights.tolist(),
        "intercept": m.intercept,
        "platt": [m.platt_a, m.platt_b],
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, ensure_ascii=False), encoding="utf-8")


def load_bias_model(path: str | Path) -> BiasModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"corrupt bias model file {path}: {exc}") from exc
    if payload.get("format") != BIAS_FORMAT:
        raise ModelError(f"not a bias model file: {path}")
    if payload.get("version", 0) > BIAS_VERSION:
        raise ModelError(
            f"bias model version {payload.get('version')} is newer than supported {BIAS_VERSION}"
        )
    cfg_raw = payload["config"]
    cfg = BiasConfig(
        word_ngrams=tuple(cfg_raw["word_ngrams"]),
        char_ngrams=tuple(cfg_raw["char_ngrams"]),
        epochs=cfg_raw["epochs"],
        c=cfg_raw["c"],
        seed=cfg_raw["seed"],
    )
    return BiasModel(
        vocabulary=payload["vocabulary"],
        idf=np.asarray(payload["idf"], dtype=np.float64),
        weights=np.asarray(payload["weights"], dtype=np.float64),
        intercept=float(payload["intercept"]),
        platt_a=float(payload["platt"][0]),
        platt_b=float(payload["platt"][1]),
        config=cfg,
    )
