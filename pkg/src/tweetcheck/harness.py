"""Experiment runner: mono-lingual splits, multilingual training, and
holdout-language (zero-shot) evaluation, with deterministic seeds and
serializable metric reports.

The fake class (label 1) is the positive class for all headline metrics;
macro-averaged F is reported alongside. Published benchmark rows are bundled
as reference data for side-by-side display; they are not reproducible at
desk scale (they required live author profiles and a fully fine-tuned
encoder) and are never asserted against.
"""

from __future__ import annotations

import hashlib
import json
import statistics
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .classifiers import TrainConfig, train
from .corpus import Dataset, preprocess_text, split_dataset
from .embeddings import EmbeddingStore
from .exceptions import ConfigError, TweetcheckError
from .factver import TrustedIndex
from .features import FAMILY_ORDER, assemble_feature_vector, fit_scaler, scale_matrix
from .pipeline import Bundle, compute_parts
from .biaser import BiasModel

DEFAULT_AS_OF = "2020-06-01T00:00:00+00:00"

MODES = ("split_within_langs", "holdout_language")


@dataclass(frozen=True)
class ExperimentConfig:
    train_langs: tuple[str, ...]
    test_langs: tuple[str, ...]
    families: tuple[str, ...] = ("TextEmbd",)
    classifier: TrainConfig = field(default_factory=lambda: TrainConfig(kind="softmax_head"))
    mode: str = "split_within_langs"
    split_seed: int = 42
    train_fraction: float = 0.8
    factver_k: int = 10
    as_of: str = DEFAULT_AS_OF

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.train_langs or not self.test_langs:
            raise ConfigError("train_langs and test_langs must be non-empty")
        unknown = [f for f in self.families if f not in FAMILY_ORDER]
        if unknown:
            raise ConfigError(f"unknown feature families: {unknown}")
        if self.mode == "holdout_language" and set(self.train_langs) & set(self.test_langs):
            raise ConfigError(
                "holdout_language mode requires disjoint train and test languages, got "
                f"train={self.train_langs} test={self.test_langs}"
            )

    def to_dict(self) -> dict:
        return {
            "train_langs": list(self.train_langs),
            "test_langs": list(self.test_langs),
            "families": list(self.families),
            "classifier": self.classifier.to_dict(),
            "mode": self.mode,
            "split_seed": self.split_seed,
            "train_fraction": self.train_fraction,
            "factver_k": self.factver_k,
            "as_of": self.as_of,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        return cls(
            train_langs=tuple(raw["train_langs"]),
            test_langs=tuple(raw["test_langs"]),
            families=tuple(raw.get("families", ("TextEmbd",))),
            classifier=TrainConfig.from_dict(raw["classifier"])
            if "classifier" in raw
            else TrainConfig(kind="softmax_head"),
            mode=raw.get("mode", "split_within_langs"),
            split_seed=raw.get("split_seed", 42),
            train_fraction=raw.get("train_fraction", 0.8),
            factver_k=raw.get("factver_k", 10),
            as_of=raw.get("as_of", DEFAULT_AS_OF),
        )


@dataclass(frozen=True)
class Metrics:
    """Positive-class precision/recall/F as fractions, plus confusion counts."""

    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f_score: float
    macro_f: float
    flags: tuple[str, ...] = ()


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float, list[str]]:
    flags = []
    if tp + fp > 0:
        precision = tp / (tp + fp)
    else:
        precision = 0.0
        flags.append("precision_undefined")
    if tp + fn > 0:
        recall = tp / (tp + fn)
    else:
        recall = 0.0
        flags.append("recall_undefined")
    if precision + recall > 0:
        f_score = 2 * precision * recall / (precision + recall)
    else:
        f_score = 0.0
        flags.append("f_undefined")
    return precision, recall, f_score, flags


def compute_metrics(pred: Sequence[int], gold: Sequence[int]) -> Metrics:
    """Fake = positive class. Zero denominators yield 0 with a flag."""
    p = np.asarray(pred, dtype=np.int64)
    g = np.asarray(gold, dtype=np.int64)
    if p.shape != g.shape or p.ndim != 1 or p.shape[0] < 1:
        raise ValueError(f"pred and gold must be equal-length 1-D, got {p.shape} vs {g.shape}")
    tp = int(np.sum((p == 1) & (g == 1)))
    fp = int(np.sum((p == 1) & (g == 0)))
    fn = int(np.sum((p == 0) & (g == 1)))
    tn = int(np.sum((p == 0) & (g == 0)))
    precision, recall, f_score, flags = _prf(tp, fp, fn)
    # Macro-F: average over both classes, each treated as positive in turn.
    _, _, f_neg, _ = _prf(tn, fn, fp)
    macro_f = (f_score + f_neg) / 2
    return Metrics(tp, fp, fn, tn, precision, recall, f_score, macro_f, tuple(flags))


@dataclass(frozen=True)
class ExperimentReport:
    """Percent-scale metrics plus everything needed to audit the run."""

    precision: float
    recall: float
    f_score: float
    macro_f: float
    confusion: dict
    per_language: dict
    config: dict
    fingerprint: str
    flags: tuple[str, ...]
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    forced_groups: tuple[str, ...] = ()
    reference: bool = False

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f_score": self.f_score,
            "macro_f": self.macro_f,
            "confusion": dict(self.confusion),
            "per_language": dict(self.per_language),
            "config": dict(self.config),
            "fingerprint": self.fingerprint,
            "flags": list(self.flags),
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
            "forced_groups": list(self.forced_groups),
            "reference": self.reference,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentReport":
        return cls(
            precision=raw["precision"],
            recall=raw["recall"],
            f_score=raw["f_score"],
            macro_f=raw["macro_f"],
            confusion=raw["confusion"],
            per_language=raw["per_language"],
            config=raw["config"],
            fingerprint=raw["fingerprint"],
            flags=tuple(raw.get("flags", ())),
            train_ids=tuple(raw.get("train_ids", ())),
            test_ids=tuple(raw.get("test_ids", ())),
            forced_groups=tuple(raw.get("forced_groups", ())),
            reference=raw.get("reference", False),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class Resources:
    embeddings: EmbeddingStore | None = None
    index: TrustedIndex | None = None
    bias_model: BiasModel | None = None

    def digest(self) -> str:
        parts = [
            self.embeddings.digest() if self.embeddings is not None else "-",
            _index_digest(self.index) if self.index is not None else "-",
            self.bias_model.config.fingerprint() if self.bias_model is not None else "-",
        ]
        return "|".join(parts)


def _index_digest(idx: TrustedIndex) -> str:
    h = hashlib.sha256()
    for doc in idx.documents:
        h.update(doc.title.encode("utf-8"))
        h.update(doc.url.encode("utf-8"))
    return h.hexdigest()[:16]


def _build_matrix(records, cfg: ExperimentConfig, resources: Resources):
    as_of = datetime.fromisoformat(cfg.as_of).astimezone(timezone.utc)
    layout = None
    rows, flags = [], []
    for rec in records:
        embedding = None
        if "TextEmbd" in cfg.families:
            if resources.embeddings is None:
                raise ConfigError("TextEmbd family selected but no embedding store provided")
            embedding = resources.embeddings.get(rec.id)
        parts, _, part_flags = compute_parts(
            cfg.families,
            raw_text=rec.text,
            clean_text=preprocess_text(rec.text),
            retweet_count=rec.retweet_count,
            favourite_count=rec.favourite_count,
            user=rec.user,
            embedding=embedding,
            index=resources.index,
            bias_model=resources.bias_model,
            as_of=as_of,
            factver_k=cfg.factver_k,
        )
        fv = assemble_feature_vector(parts, cfg.families)
        if layout is None:
            layout = fv.layout
        elif fv.layout != layout:
            raise ConfigError("inconsistent feature layout across records")
        rows.append(fv.values)
        for f in part_flags:
            if f not in flags:
                flags.append(f)
    return np.asarray(rows, dtype=np.float64), layout, flags


def _percent(x: float) -> float:
    return 100.0 * x


def _metrics_dict(m: Metrics) -> dict:
    return {
        "precision": _percent(m.precision),
        "recall": _percent(m.recall),
        "f_score": _percent(m.f_score),
        "macro_f": _percent(m.macro_f),
        "support": m.tp + m.fp + m.fn + m.tn,
    }


def run_experiment(cfg: ExperimentConfig, ds: Dataset, resources: Resources) -> ExperimentReport:
    """Preprocess -> features -> train-fit scaling -> train -> evaluate."""
    scope = tuple(sorted(set(cfg.train_langs) | set(cfg.test_langs)))
    sub = ds.filter(scope)
    present = set(r.lang for r in sub)
    missing = [lang for lang in scope if lang not in present]
    if missing:
        raise ConfigError(f"dataset has no rows for languages: {missing}")

    flags: list[str] = []
    forced_groups: tuple[str, ...] = ()
    if cfg.mode == "split_within_langs":
        split = split_dataset(sub, cfg.train_fraction, cfg.split_seed)
        train_rows = [r for r in split.train if r.lang in cfg.train_langs]
        test_rows = [r for r in split.test if r.lang in cfg.test_langs]
        forced_groups = split.forced_groups
        if forced_groups:
            flags.append(f"origin_groups_forced_to_train:{len(forced_groups)}")
    else:
        train_rows = [r for r in sub if r.lang in cfg.train_langs]
        test_rows = [r for r in sub if r.lang in cfg.test_langs]
        cross = {
            key
            for key, langs in _group_langs(sub).items()
            if langs & set(cfg.train_langs) and langs & set(cfg.test_langs)
        }
        if cross:
            flags.append(f"origin_groups_cross_partition:{len(cross)}")
    if not train_rows or not test_rows:
        raise ConfigError("empty train or test set after language filtering")

    X_train, layout, part_flags = _build_matrix(train_rows, cfg, resources)
    X_test, _, _ = _build_matrix(test_rows, cfg, resources)
    flags.extend(f for f in part_flags if f not in flags)
    y_train = np.array([r.label for r in train_rows], dtype=np.int64)
    y_test = np.array([r.label for r in test_rows], dtype=np.int64)

    scaler = fit_scaler(X_train)
    X_train_s = scale_matrix(scaler, X_train)
    X_test_s = scale_matrix(scaler, X_test)

    model = train(cfg.classifier, X_train_s, y_train, layout=layout, families=cfg.families)
    preds = model.predict(X_test_s)
    overall = compute_metrics(preds, y_test)
    flags.extend(f for f in overall.flags if f not in flags)

    per_language = {}
    for lang in cfg.test_langs:
        mask = np.array([r.lang == lang for r in test_rows])
        if mask.any():
            per_language[lang] = _metrics_dict(compute_metrics(preds[mask], y_test[mask]))

    fingerprint_blob = json.dumps(
        {
            "config": cfg.to_dict(),
            "dataset": ds.digest(),
            "resources": resources.digest(),
        },
        sort_keys=True,
    )
    return ExperimentReport(
        precision=_percent(overall.precision),
        recall=_percent(overall.recall),
        f_score=_percent(overall.f_score),
        macro_f=_percent(overall.macro_f),
        confusion={"tp": overall.tp, "fp": overall.fp, "fn": overall.fn, "tn": overall.tn},
        per_language=per_language,
        config=cfg.to_dict(),
        fingerprint=hashlib.sha256(fingerprint_blob.encode()).hexdigest()[:16],
        flags=tuple(flags),
        train_ids=tuple(r.id for r in train_rows),
        test_ids=tuple(r.id for r in test_rows),
        forced_groups=forced_groups,
    )


def _group_langs(ds: Dataset) -> dict[str, set[str]]:
    groups: dict[str, set[str]] = {}
    for r in ds:
        groups.setdefault(r.origin_key, set()).add(r.lang)
    return groups


def make_bundle(cfg: ExperimentConfig, ds: Dataset, resources: Resources) -> Bundle:
    """Train on the configured training side and package model + scaler."""
    scope = tuple(sorted(set(cfg.train_langs)))
    sub = ds.filter(scope)
    if cfg.mode == "split_within_langs":
        split = split_dataset(sub, cfg.train_fraction, cfg.split_seed)
        train_rows = [r for r in split.train if r.lang in cfg.train_langs]
    else:
        train_rows = [r for r in sub if r.lang in cfg.train_langs]
    if not train_rows:
        raise ConfigError("no training rows for the configured languages")
    X, layout, _ = _build_matrix(train_rows, cfg, resources)
    y = np.array([r.label for r in train_rows], dtype=np.int64)
    scaler = fit_scaler(X)
    model = train(cfg.classifier, scale_matrix(scaler, X), y, layout=layout, families=cfg.families)
    return Bundle(
        model=model,
        scaler=scaler,
        families=cfg.families,
        layout=layout,
        as_of=datetime.fromisoformat(cfg.as_of).astimezone(timezone.utc),
        factver_k=cfg.factver_k,
    )


@dataclass(frozen=True)
class SweepResult:
    reports: tuple[ExperimentReport, ...]
    failures: tuple[tuple[int, str], ...]
    f_min: float
    f_median: float
    f_max: float
    chosen_seed: int | None

    def summary(self) -> dict:
        return {
            "runs": len(self.reports),
            "failures": [list(f) for f in self.failures],
            "f_min": self.f_min,
            "f_median": self.f_median,
            "f_max": self.f_max,
            "chosen_seed": self.chosen_seed,
        }


def seed_sweep(
    cfg: ExperimentConfig, ds: Dataset, resources: Resources, seeds: Sequence[int]
) -> SweepResult:
    """One run per seed (seeding both the split and the classifier).

    Per-seed failures are recorded and do not abort the sweep. The chosen
    seed is the one attaining the median F (ties break toward the lower
    seed), mirroring the fix-one-seed protocol.
    """
    if not seeds:
        raise ConfigError("seed list must be non-empty")
    reports: list[ExperimentReport] = []
    failures: list[tuple[int, str]] = []
    scored: list[tuple[float, int]] = []
    for seed in seeds:
        run_cfg = replace(
            cfg,
            split_seed=seed,
            classifier=replace(cfg.classifier, seed=seed),
        )
        try:
            report = run_experiment(run_cfg, ds, resources)
        except TweetcheckError as exc:
            failures.append((seed, str(exc)))
            continue
        reports.append(report)
        scored.append((report.f_score, seed))
    if not scored:
        return SweepResult(tuple(reports), tuple(failures), 0.0, 0.0, 0.0, None)
    scored.sort()
    f_values = [f for f, _ in scored]
    chosen = scored[(len(scored) - 1) // 2][1]
    return SweepResult(
        reports=tuple(reports),
        failures=tuple(failures),
        f_min=min(f_values),
        f_median=statistics.median(f_values),
        f_max=max(f_values),
        chosen_seed=chosen,
    )


@dataclass(frozen=True)
class ReferenceRow:
    setting: str
    train: str
    test: str
    features: str
    precision: float | None
    recall: float | None
    f_score: float


# Published benchmark rows shipped for comparison in rendered tables.
REFERENCE_ROWS = (
    ReferenceRow("mono-lingual", "en", "en", "TextEmbd", 87.17, 91.89, 89.47),
    ReferenceRow("multilingual-train", "en+hi+bn", "hi", "TextEmbd+FactVer", 75.00, 84.0, 79.24),
    ReferenceRow("multilingual-train", "en+hi+bn", "bn", "TextEmbd", 76.47, 86.66, 81.25),
    ReferenceRow("zero-shot", "en+bn", "hi", "TextEmbd", 70.30, 95.80, 81.09),
    ReferenceRow("zero-shot", "en+hi", "bn", "TextEmbd", 90.66, 68.68, 77.79),
    ReferenceRow("zero-shot", "hi+bn", "en", "TextEmbd", 92.75, 62.95, 75.00),
)


def render_table(reports: Sequence[ExperimentReport], include_reference: bool = False) -> str:
    """Fixed-width grid of runs (optionally with the bundled reference rows)."""
    header = ("setting", "train", "test", "features", "prec", "recall", "f-score")
    rows = []
    if include_reference:
        for ref in REFERENCE_ROWS:
            rows.append(
                (
                    f"[reference] {ref.setting}",
                    ref.train,
                    ref.test,
                    ref.features,
                    f"{ref.precision:.2f}" if ref.precision is not None else "-",
                    f"{ref.recall:.2f}" if ref.recall is not None else "-",
                    f"{ref.f_score:.2f}",
                )
            )
    for rep in reports:
        cfg = rep.config
        rows.append(
            (
                cfg.get("mode", "?"),
                "+".join(cfg.get("train_langs", ())),
                "+".join(cfg.get("test_langs", ())),
                "+".join(cfg.get("families", ())),
                f"{rep.precision:.2f}",
                f"{rep.recall:.2f}",
                f"{rep.f_score:.2f}",
            )
        )
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) if rows else len(header[i]) for i in range(len(header))]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(header))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(r[i].ljust(widths[i]) for i in range(len(header))))
    return "\n".join(lines)
