"""Sentence-embedding storage and the embedding-provider HTTP client.

The engine never runs a transformer encoder itself. Embeddings arrive either
as a precomputed file or from a provider endpoint speaking a one-call
protocol: POST /embed {"texts": [...]} -> {"model_id": ..., "vectors": [[...]]}.

File format: UTF-8 lines. Line 1 is a header {"dim": D, "model_id": "..."};
every following line is {"id": "...", "values": [D floats]}.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import requests

from .exceptions import EmbeddingError, ProviderError

DEFAULT_DIM = 768


@dataclass(frozen=True)
class EmbeddingStore:
    """Validated id -> fixed-width vector map. Immutable after load."""

    dim: int
    model_id: str
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, rec_id: str) -> bool:
        return rec_id in self.vectors

    def get(self, rec_id: str) -> np.ndarray:
        try:
            return self.vectors[rec_id]
        except KeyError:
            raise EmbeddingError(f"no embedding for id {rec_id!r}") from None

    def digest(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(f"{self.dim}|{self.model_id}".encode("utf-8"))
        for rec_id in sorted(self.vectors):
            h.update(rec_id.encode("utf-8"))
            h.update(self.vectors[rec_id].tobytes())
        return h.hexdigest()[:16]


def load_embeddings(path: str | Path) -> EmbeddingStore:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise EmbeddingError(f"cannot read embedding file {path}: {exc}") from exc
    if not lines:
        raise EmbeddingError(f"embedding file {path} is empty (missing header)")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise EmbeddingError(f"line 1: invalid header JSON ({exc.msg})") from exc
    if not isinstance(header, dict) or "dim" not in header or "model_id" not in header:
        raise EmbeddingError("line 1: header must declare 'dim' and 'model_id'")
    dim = header["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise EmbeddingError(f"line 1: dim must be a positive integer, got {dim!r}")

    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EmbeddingError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(raw, dict) or "id" not in raw or "values" not in raw:
            raise EmbeddingError(f"line {lineno}: row needs 'id' and 'values'")
        rec_id = raw["id"]
        values = np.asarray(raw["values"], dtype=np.float64)
        if values.ndim != 1 or values.shape[0] != dim:
            raise EmbeddingError(
                f"row for id {rec_id!r} has {values.shape[0] if values.ndim == 1 else 'malformed'}"
                f" values, expected {dim}"
            )
        if not np.all(np.isfinite(values)):
            raise EmbeddingError(f"row for id {rec_id!r} contains non-finite values")
        if rec_id in vectors:
            raise EmbeddingError(f"duplicate embedding id {rec_id!r}")
        vectors[rec_id] = values
    return EmbeddingStore(dim=dim, model_id=str(header["model_id"]), vectors=vectors)


def save_embeddings(store: EmbeddingStore, path: str | Path) -> None:
    """Write header + rows; float values round-trip bit-exactly."""
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"dim": store.dim, "model_id": store.model_id}))
        fh.write("\n")
        for rec_id, vec in store.vectors.items():
            fh.write(json.dumps({"id": rec_id, "values": vec.tolist()}))
            fh.write("\n")


@dataclass(frozen=True)
class EmbeddingProviderClient:
    """Batched HTTP client for the /embed protocol."""

    endpoint: str
    batch_size: int = 32
    timeout: float = 10.0
    retries: int = 2
    expected_dim: int | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ProviderError(f"batch_size must be >= 1, got {self.batch_size}")


def fetch_embeddings(
    client: EmbeddingProviderClient,
    texts: Sequence[str],
    post: Callable | None = None,
    backoff: float = 0.05,
) -> list[np.ndarray]:
    """Fetch one vector per text, preserving input order.

    Requests go out in batches of ``client.batch_size``; transient failures
    (connection errors, timeouts, 5xx) are retried up to ``client.retries``
    extra attempts per batch. ``post`` is injectable for testing and defaults
    to ``requests.post``.
    """
    if not texts:
        return []
    do_post = post or requests.post
    url = client.endpoint.rstrip("/") + "/embed"
    out: list[np.ndarray] = []
    dim = client.expected_dim
    for start in range(0, len(texts), client.batch_size):
        batch = list(texts[start : start + client.batch_size])
        payload = None
        last_error: Exception | None = None
        for attempt in range(client.retries + 1):
            try:
                resp = do_post(url, json={"texts": batch}, timeout=client.timeout)
                if resp.status_code >= 500:
                    last_error = ProviderError(f"provider returned status {resp.status_code}")
                elif resp.status_code != 200:
                    raise ProviderError(f"provider returned status {resp.status_code}")
                else:
                    payload = resp.json()
                    break
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = exc
            if attempt < client.retries and backoff > 0:
                time.sleep(backoff * (attempt + 1))
        if payload is None:
            raise ProviderError(f"provider unreachable after {client.retries + 1} attempts: {last_error}")
        vectors = payload.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(batch):
            got = len(vectors) if isinstance(vectors, list) else "no"
            raise ProviderError(f"provider returned {got} vectors for {len(batch)} texts")
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float64)
            if dim is None:
                dim = arr.shape[0]
            if arr.ndim != 1 or arr.shape[0] != dim:
                raise ProviderError(f"provider vector has dimension {arr.shape}, expected {dim}")
            if not np.all(np.isfinite(arr)):
                raise ProviderError("provider vector contains non-finite values")
            out.append(arr)
    return out
