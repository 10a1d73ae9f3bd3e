"""From-scratch binary classifiers behind one train/predict/serialize contract.

Four kinds:

    linear_svm    L2-regularized hinge loss by per-sample subgradient descent
                  with decaying step 1/(lambda*t); probabilities via Platt
                  scaling fitted on training margins. C=1 by default; gamma
                  is recorded for completeness but inert for a linear kernel.
    random_forest 400 bootstrap trees, greedy gini splits, per-node feature
                  subsampling of floor(sqrt(d)); probability is the fraction
                  of tree votes.
    mlp           hidden layers (30, 10), ReLU, softmax cross-entropy,
                  mini-batches of 32 with a seeded shuffle, adaptive-moment
                  updates at step 1e-3, 1000 epochs.
    softmax_head  input-width x 2 linear layer + softmax over frozen
                  embeddings; same optimizer as the mlp.

All training is deterministic for a fixed (config, data) pair: a fixed seed
produces a byte-identical model file. Probability pairs are
(p_non_fake, p_fake); exact ties predict label 0.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .calibration import apply_platt, fit_platt
from .exceptions import ModelError
from .features import FeatureVector, layout_hash

MODEL_FORMAT = "tweetcheck-model"
MODEL_VERSION = 1

KINDS = ("linear_svm", "random_forest", "mlp", "softmax_head")


@dataclass(frozen=True)
class TrainConfig:
    kind: str
    seed: int = 0
    # linear_svm
    svm_c: float = 1.0
    svm_gamma: float = 1.0  # recorded, unused by the linear kernel
    svm_epochs: int = 100
    # random_forest
    n_trees: int = 400
    max_depth: int | None = None
    bootstrap: bool = True
    # mlp / softmax_head
    hidden_layers: tuple[int, ...] = (30, 10)
    epochs: int = 1000
    batch_size: int = 32
    learning_rate: float = 1e-3

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelError(f"unknown classifier kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "svm_c": self.svm_c,
            "svm_gamma": self.svm_gamma,
            "svm_epochs": self.svm_epochs,
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "bootstrap": self.bootstrap,
            "hidden_layers": list(self.hidden_layers),
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        raw = dict(raw)
        if "hidden_layers" in raw:
            raw["hidden_layers"] = tuple(raw["hidden_layers"])
        return cls(**raw)

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


# ---------------------------------------------------------------------------
# linear SVM


def _train_svm(cfg: TrainConfig, X: np.ndarray, y: np.ndarray) -> dict:
    n, _ = X.shape
    signs = np.where(y == 1, 1.0, -1.0)
    lam = 1.0 / (cfg.svm_c * n)
    w = np.zeros(X.shape[1], dtype=np.float64)
    b = 0.0
    rng = np.random.default_rng(cfg.seed)
    history = []
    t = 0
    for _ in range(cfg.svm_epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            margin = signs[i] * (float(X[i] @ w) + b)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * signs[i] * X[i]
                b += eta * signs[i]
        hinge = np.maximum(0.0, 1.0 - signs * (X @ w + b)).mean()
        history.append(float(0.5 * lam * (w @ w) + hinge))
    margins = (X @ w + b).tolist()
    a, pb = fit_platt(margins, y.tolist())
    return {"w": w, "b": b, "platt": (a, pb), "loss_history": history}


def _svm_proba(params: dict, X: np.ndarray) -> np.ndarray:
    margins = X @ params["w"] + params["b"]
    a, b = params["platt"]
    p_fake = np.array([apply_platt(a, b, float(m)) for m in margins])
    return np.column_stack([1.0 - p_fake, p_fake])


# ---------------------------------------------------------------------------
# random forest


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p * p).sum())


def _best_split_on(X: np.ndarray, y: np.ndarray, feature: int) -> tuple[float, float] | None:
    """Best (weighted gini, threshold) for one feature, or None if unsplittable."""
    col = X[:, feature]
    order = np.argsort(col, kind="stable")
    col_sorted = col[order]
    y_sorted = y[order]
    n = len(y_sorted)
    best: tuple[float, float] | None = None
    left = np.zeros(2)
    right = np.bincount(y_sorted, minlength=2).astype(np.float64)
    for i in range(n - 1):
        left[y_sorted[i]] += 1
        right[y_sorted[i]] -= 1
        if col_sorted[i] == col_sorted[i + 1]:
            continue
        weighted = ((i + 1) * _gini(left) + (n - i - 1) * _gini(right)) / n
        if best is None or weighted < best[0] - 1e-12:
            threshold = (col_sorted[i] + col_sorted[i + 1]) / 2.0
            best = (weighted, threshold)
    return best


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    max_features: int | None = None,
    max_depth: int | None = None,
    depth: int = 0,
) -> dict:
    """Greedy gini decision tree; leaves vote the majority label (tie -> 0)."""
    counts = np.bincount(y, minlength=2)
    majority = 1 if counts[1] > counts[0] else 0
    if counts[0] == 0 or counts[1] == 0 or len(y) < 2:
        return {"leaf": majority}
    if max_depth is not None and depth >= max_depth:
        return {"leaf": majority}

    d = X.shape[1]
    m = d if max_features is None else max(1, min(max_features, d))
    sampled = sorted(rng.choice(d, size=m, replace=False).tolist())
    remaining = [f for f in range(d) if f not in sampled]

    parent_gini = _gini(counts.astype(np.float64))
    best: tuple[float, float, int] | None = None
    for feature in sampled:
        found = _best_split_on(X, y, feature)
        if found is not None and found[0] < parent_gini - 1e-12:
            if best is None or found[0] < best[0] - 1e-12:
                best = (found[0], found[1], feature)
    if best is None:
        # No sampled feature splits this node; fall back to the first valid
        # split among the rest so subsampling cannot strand an impure node.
        for feature in remaining:
            found = _best_split_on(X, y, feature)
            if found is not None and found[0] < parent_gini - 1e-12:
                best = (found[0], found[1], feature)
                break
    if best is None:
        return {"leaf": majority}
    _, threshold, feature = best
    mask = X[:, feature] <= threshold
    return {
        "f": feature,
        "t": threshold,
        "l": grow_tree(X[mask], y[mask], rng, max_features, max_depth, depth + 1),
        "r": grow_tree(X[~mask], y[~mask], rng, max_features, max_depth, depth + 1),
    }


def _tree_vote(node: dict, x: np.ndarray) -> int:
    while "leaf" not in node:
        node = node["l"] if x[node["f"]] <= node["t"] else node["r"]
    return node["leaf"]


def _train_forest(cfg: TrainConfig, X: np.ndarray, y: np.ndarray) -> dict:
    n, d = X.shape
    max_features = max(1, int(math.isqrt(d)))
    trees = []
    for i in range(cfg.n_trees):
        rng = np.random.default_rng(cfg.seed + i)
        if cfg.bootstrap:
            idx = rng.integers(0, n, size=n)
            Xb, yb = X[idx], y[idx]
        else:
            Xb, yb = X, y
        trees.append(grow_tree(Xb, yb, rng, max_features, cfg.max_depth))
    return {"trees": trees}


def _forest_proba(params: dict, X: np.ndarray) -> np.ndarray:
    trees = params["trees"]
    votes = np.zeros(X.shape[0])
    for tree in trees:
        votes += np.array([_tree_vote(tree, x) for x in X])
    p_fake = votes / len(trees)
    return np.column_stack([1.0 - p_fake, p_fake])


# ---------------------------------------------------------------------------
# MLP / softmax head


def _init_layers(dims: Sequence[int], rng: np.random.Generator) -> tuple[list, list]:
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return weights, biases


def _forward(weights: list, biases: list, X: np.ndarray) -> tuple[list, np.ndarray]:
    """Returns (hidden activations per layer incl. input, output probabilities)."""
    acts = [X]
    h = X
    for W, b in zip(weights[:-1], biases[:-1]):
        h = _relu(h @ W + b)
        acts.append(h)
    logits = h @ weights[-1] + biases[-1]
    return acts, softmax(logits)


def _net_gradients(
    weights: list, biases: list, X: np.ndarray, y: np.ndarray
) -> tuple[list, list]:
    """Analytic softmax cross-entropy gradients, mean reduction over the batch."""
    n = X.shape[0]
    acts, probs = _forward(weights, biases, X)
    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    d_weights = [np.zeros_like(W) for W in weights]
    d_biases = [np.zeros_like(b) for b in biases]
    for layer in range(len(weights) - 1, -1, -1):
        d_weights[layer] = acts[layer].T @ delta
        d_biases[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = delta @ weights[layer].T
            delta[acts[layer] <= 0.0] = 0.0
    return d_weights, d_biases


def _net_loss(weights: list, biases: list, X: np.ndarray, y: np.ndarray) -> float:
    _, probs = _forward(weights, biases, X)
    eps = 1e-12
    return float(-np.log(probs[np.arange(len(y)), y] + eps).mean())


def _train_net(cfg: TrainConfig, X: np.ndarray, y: np.ndarray, hidden: tuple[int, ...]) -> dict:
    n, d = X.shape
    dims = [d, *hidden, 2]
    rng = np.random.default_rng(cfg.seed)
    weights, biases = _init_layers(dims, rng)
    m_w = [np.zeros_like(W) for W in weights]
    v_w = [np.zeros_like(W) for W in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    lr = cfg.learning_rate
    step = 0
    history = []
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            d_w, d_b = _net_gradients(weights, biases, X[batch], y[batch])
            step += 1
            corr1 = 1.0 - beta1**step
            corr2 = 1.0 - beta2**step
            for i in range(len(weights)):
                m_w[i] = beta1 * m_w[i] + (1 - beta1) * d_w[i]
                v_w[i] = beta2 * v_w[i] + (1 - beta2) * d_w[i] ** 2
                weights[i] -= lr * (m_w[i] / corr1) / (np.sqrt(v_w[i] / corr2) + eps)
                m_b[i] = beta1 * m_b[i] + (1 - beta1) * d_b[i]
                v_b[i] = beta2 * v_b[i] + (1 - beta2) * d_b[i] ** 2
                biases[i] -= lr * (m_b[i] / corr1) / (np.sqrt(v_b[i] / corr2) + eps)
        history.append(_net_loss(weights, biases, X, y))
    return {"weights": weights, "biases": biases, "dims": dims, "loss_history": history}


def _net_proba(params: dict, X: np.ndarray) -> np.ndarray:
    _, probs = _forward(params["weights"], params["biases"], X)
    return probs


# ---------------------------------------------------------------------------
# unified contract


@dataclass
class TrainedModel:
    kind: str
    config: TrainConfig
    n_features: int
    params: dict
    layout_hash: str | None = None
    families: tuple[str, ...] = field(default_factory=tuple)

    def predict_proba(self, x) -> np.ndarray:
        """(p_non_fake, p_fake) rows for a matrix, FeatureVector, or 1-D vector."""
        single = False
        if isinstance(x, FeatureVector):
            if self.layout_hash is not None and x.hash != self.layout_hash:
                raise ModelError(
                    f"feature layout mismatch: model expects {self.layout_hash}, got {x.hash}"
                )
            X = x.array.reshape(1, -1)
            single = True
        else:
            X = np.asarray(x, dtype=np.float64)
            if X.ndim == 1:
                X = X.reshape(1, -1)
                single = True
        if X.shape[1] != self.n_features:
            raise ModelError(
                f"model expects {self.n_features} features, got {X.shape[1]}"
            )
        if self.kind == "linear_svm":
            probs = _svm_proba(self.params, X)
        elif self.kind == "random_forest":
            probs = _forest_proba(self.params, X)
        else:
            probs = _net_proba(self.params, X)
        return probs[0] if single else probs

    def predict(self, x) -> np.ndarray | int:
        probs = self.predict_proba(x)
        if probs.ndim == 1:
            return int(probs[1] > probs[0])
        return (probs[:, 1] > probs[:, 0]).astype(int)

    def fingerprint(self) -> str:
        blob = json.dumps(_serialize(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def train(
    cfg: TrainConfig,
    X: np.ndarray,
    y: Sequence[int],
    layout: Sequence[str] | None = None,
    families: Sequence[str] = (),
) -> TrainedModel:
    """Train a classifier; deterministic for a fixed (cfg, X, y)."""
    X = np.asarray(X, dtype=np.float64)
    y_arr = np.asarray(y, dtype=np.int64)
    if X.ndim != 2:
        raise ModelError("training matrix must be 2-D")
    if X.shape[0] != y_arr.shape[0]:
        raise ModelError("row count and label count differ")
    if X.shape[0] < 2:
        raise ModelError("need at least 2 training rows")
    if not np.all(np.isfinite(X)):
        raise ModelError("training matrix contains non-finite values")
    classes = set(y_arr.tolist())
    if not classes <= {0, 1}:
        raise ModelError(f"labels must be binary 0/1, got {sorted(classes)}")
    if len(classes) < 2:
        raise ModelError("training labels are single-class; both classes required")
    if layout is not None and len(layout) != X.shape[1]:
        raise ModelError(
            f"declared layout has {len(layout)} features but matrix has {X.shape[1]}"
        )

    if cfg.kind == "linear_svm":
        params = _train_svm(cfg, X, y_arr)
    elif cfg.kind == "random_forest":
        params = _train_forest(cfg, X, y_arr)
    elif cfg.kind == "mlp":
        params = _train_net(cfg, X, y_arr, cfg.hidden_layers)
    else:
        params = _train_net(cfg, X, y_arr, ())
    return TrainedModel(
        kind=cfg.kind,
        config=cfg,
        n_features=X.shape[1],
        params=params,
        layout_hash=layout_hash(layout) if layout is not None else None,
        families=tuple(families),
    )


def predict_proba(m: TrainedModel, x) -> np.ndarray:
    return m.predict_proba(x)


def mlp_gradient(m: TrainedModel, X: np.ndarray, y: Sequence[int]) -> tuple[list, list]:
    """Analytic backprop gradients for an mlp/softmax_head model on one batch.

    Exposed for gradient verification against finite differences.
    """
    if m.kind not in ("mlp", "softmax_head"):
        raise ModelError(f"gradients only defined for network models, not {m.kind}")
    X = np.asarray(X, dtype=np.float64)
    y_arr = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise ModelError("gradient batch must be non-empty")
    return _net_gradients(m.params["weights"], m.params["biases"], X, y_arr)


def net_loss(m: TrainedModel, X: np.ndarray, y: Sequence[int]) -> float:
    if m.kind not in ("mlp", "softmax_head"):
        raise ModelError(f"loss only defined for network models, not {m.kind}")
    return _net_loss(m.params["weights"], m.params["biases"], np.asarray(X, dtype=np.float64), np.asarray(y))


# ---------------------------------------------------------------------------
# serialization


def _serialize(m: TrainedModel) -> dict:
    params: dict = {}
    if m.kind == "linear_svm":
        params = {
            "w": m.params["w"].tolist(),
            "b": m.params["b"],
            "platt": list(m.params["platt"]),
            "loss_history": m.params["loss_history"],
        }
    elif m.kind == "random_forest":
        params = {"trees": m.params["trees"]}
    else:
        params = {
            "weights": [W.tolist() for W in m.params["weights"]],
            "biases": [b.tolist() for b in m.params["biases"]],
            "dims": list(m.params["dims"]),
            "loss_history": m.params["loss_history"],
        }
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": m.kind,
        "config": m.config.to_dict(),
        "n_features": m.n_features,
        "layout_hash": m.layout_hash,
        "families": list(m.families),
        "params": params,
    }


def save_model(m: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(_serialize(m), sort_keys=True, ensure_ascii=False), encoding="utf-8"
    )


def _deserialize(payload: dict) -> TrainedModel:
    kind = payload["kind"]
    raw = payload["params"]
    if kind == "linear_svm":
        params = {
            "w": np.asarray(raw["w"], dtype=np.float64),
            "b": float(raw["b"]),
            "platt": (float(raw["platt"][0]), float(raw["platt"][1])),
            "loss_history": list(raw["loss_history"]),
        }
    elif kind == "random_forest":
        params = {"trees": raw["trees"]}
    elif kind in ("mlp", "softmax_head"):
        params = {
            "weights": [np.asarray(W, dtype=np.float64) for W in raw["weights"]],
            "biases": [np.asarray(b, dtype=np.float64) for b in raw["biases"]],
            "dims": list(raw["dims"]),
            "loss_history": list(raw["loss_history"]),
        }
    else:
        raise ModelError(f"unknown classifier kind {kind!r} in model file")
    return TrainedModel(
        kind=kind,
        config=TrainConfig.from_dict(payload["config"]),
        n_features=payload["n_features"],
        params=params,
        layout_hash=payload.get("layout_hash"),
        families=tuple(payload.get("families", ())),
    )


def load_model(path: str | Path) -> TrainedModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelError(f"corrupt model file {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise ModelError(f"not a model file: {path}")
    version = payload.get("version", 0)
    if version > MODEL_VERSION:
        raise ModelError(
            f"model file version {version} is newer than supported {MODEL_VERSION}"
        )
    try:
        return _deserialize(payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"corrupt model file {path}: {exc}") from exc


def default_config(kind: str, seed: int = 0, **overrides) -> TrainConfig:
    return replace(TrainConfig(kind=kind, seed=seed), **overrides)
