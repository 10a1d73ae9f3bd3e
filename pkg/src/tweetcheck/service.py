"""HTTP prediction service: POST /predict, GET /health, GET /version, plus an
optional static mount for the triage UI.

All loaded artifacts are immutable; request handling is read-only, so
concurrent identical requests produce identical verdicts.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import __version__
from .biaser import load_bias_model
from .corpus import UserProfile
from .embeddings import EmbeddingProviderClient, load_embeddings
from .exceptions import (
    ConfigError,
    EmbeddingError,
    EmptyTextError,
    MissingFamilyError,
    TweetcheckError,
)
from .factver import load_index
from .pipeline import Pipeline, load_bundle, provider_embedder, store_embedder

log = logging.getLogger("tweetcheck.service")


class UserIn(BaseModel):
    handle: str = Field(min_length=1)
    real_name: str = ""
    description: str = ""
    official_url: str | None = None
    followers_count: int = Field(0, ge=0)
    friends_count: int = Field(0, ge=0)
    listed_count: int = Field(0, ge=0)
    favourites_count: int = Field(0, ge=0)
    statuses_count: int = Field(0, ge=0)
    geo_enabled: bool = False
    verified: bool = False
    protected: bool = False
    created_at: str = "2000-01-01T00:00:00+00:00"
    latest_tweet_at: str | None = None

    def to_profile(self) -> UserProfile:
        from .corpus import parse_utc

        return UserProfile(
            handle=self.handle,
            real_name=self.real_name,
            description=self.description,
            official_url=self.official_url,
            followers_count=self.followers_count,
            friends_count=self.friends_count,
            listed_count=self.listed_count,
            favourites_count=self.favourites_count,
            statuses_count=self.statuses_count,
            geo_enabled=self.geo_enabled,
            verified=self.verified,
            protected=self.protected,
            created_at=parse_utc(self.created_at, "created_at"),
            latest_tweet_at=parse_utc(self.latest_tweet_at, "latest_tweet_at")
            if self.latest_tweet_at
            else None,
        )


class PredictIn(BaseModel):
    text: str
    lang: str | None = None
    retweet_count: int = Field(0, ge=0)
    favourite_count: int = Field(0, ge=0)
    user: UserIn | None = None


def create_app(pipeline: Pipeline, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="tweetcheck", version=__version__)

    @app.middleware("http")
    async def request_log(request, call_next):
        started = time.perf_counter()
        response = await call_next(request)
        log.info(
            json.dumps(
                {
                    "method": request.method,
                    "path": request.url.path,
                    "status": response.status_code,
                    "ms": round((time.perf_counter() - started) * 1000, 2),
                }
            )
        )
        return response

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "model_fingerprint": pipeline.bundle.fingerprint,
            "dim": pipeline.bundle.dim,
            "families": list(pipeline.bundle.families),
        }

    @app.get("/version")
    def version():
        return {"name": "tweetcheck", "version": __version__}

    @app.post("/predict")
    def predict(body: PredictIn):
        try:
            user = body.user.to_profile() if body.user is not None else None
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        try:
            verdict = pipeline.classify(
                body.text,
                user=user,
                lang=body.lang,
                retweet_count=body.retweet_count,
                favourite_count=body.favourite_count,
            )
        except EmptyTextError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except MissingFamilyError as exc:
            raise HTTPException(
                status_code=422,
                detail={"error": str(exc), "missing_family": exc.family},
            )
        except EmbeddingError as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        except TweetcheckError as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        return verdict.to_dict()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app


@dataclass(frozen=True)
class ServeConfig:
    bundle: str
    embeddings: str | None = None
    provider_url: str | None = None
    index: str | None = None
    allowlist: str | None = None
    bias_model: str | None = None
    host: str = "127.0.0.1"
    port: int = 8000
    static_dir: str | None = None


_ENV_PREFIX = "TWEETCHECK_"


def load_serve_config(path: str | Path | None = None, env: dict | None = None) -> ServeConfig:
    """Config file (JSON key-value) with TWEETCHECK_* environment overrides."""
    raw: dict = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read service config {path}: {exc}") from exc
    env = env if env is not None else dict(os.environ)
    for key in (
        "bundle",
        "embeddings",
        "provider_url",
        "index",
        "allowlist",
        "bias_model",
        "host",
        "port",
        "static_dir",
    ):
        env_key = _ENV_PREFIX + key.upper()
        if env_key in env:
            raw[key] = env[env_key]
    if "bundle" not in raw:
        raise ConfigError("service config requires a 'bundle' path")
    if "port" in raw:
        raw["port"] = int(raw["port"])
    return ServeConfig(**raw)


def build_pipeline(cfg: ServeConfig) -> Pipeline:
    bundle_path = Path(cfg.bundle)
    if not bundle_path.exists():
        raise ConfigError(f"model bundle not found: {bundle_path}")
    bundle = load_bundle(bundle_path)

    embedder = None
    if cfg.provider_url:
        embedder = provider_embedder(EmbeddingProviderClient(endpoint=cfg.provider_url))
    elif cfg.embeddings:
        embedder = store_embedder(load_embeddings(cfg.embeddings))

    index = None
    if cfg.index and cfg.allowlist:
        index = load_index(cfg.index, cfg.allowlist)
    elif cfg.index or cfg.allowlist:
        raise ConfigError("index and allowlist must be configured together")

    bias_model = load_bias_model(cfg.bias_model) if cfg.bias_model else None
    return Pipeline(bundle=bundle, embedder=embedder, index=index, bias_model=bias_model)


def serve(cfg: ServeConfig) -> None:
    """Blocking: build the pipeline and run the HTTP server."""
    import uvicorn

    pipeline = build_pipeline(cfg)
    app = create_app(pipeline, static_dir=cfg.static_dir)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")
