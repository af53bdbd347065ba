"""HTTP surface: /ner_score, /embed, /health.

All endpoints are side-effect-free JSON-in/JSON-out.  Requests are rejected
with 400 when the batch is empty, oversized, or contains an empty phrase,
and with 503 until both model backends are loaded.  Responses align 1:1
with request order, so the service is safe to call concurrently.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .backends import build_embed_backend, build_ner_backend
from .config import SidecarConfig


class NerRequest(BaseModel):
    phrases: list[str]


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(config: SidecarConfig | None = None, defer_load: bool = False) -> FastAPI:
    """Build the service; ``defer_load`` leaves models unloaded until
    ``app.state.load()`` runs (used by deployment hooks and readiness tests).
    """
    config = config or SidecarConfig()
    app = FastAPI(title="tf-sidecar")
    app.state.config = config
    app.state.ner = None
    app.state.embed = None

    def load() -> None:
        if app.state.ner is None:
            app.state.ner = build_ner_backend(config.ner_model_id, config.device)
        if app.state.embed is None:
            app.state.embed = build_embed_backend(config.embed_model_id, config.device)

    app.state.load = load
    if not defer_load:
        load()

    def _check_ready() -> None:
        if app.state.ner is None or app.state.embed is None:
            raise HTTPException(status_code=503, detail="models are still loading")

    def _check_batch(items: list[str], what: str) -> None:
        if not items:
            raise HTTPException(status_code=400, detail=f"empty {what} batch")
        if len(items) > config.max_batch:
            raise HTTPException(
                status_code=400,
                detail=f"batch of {len(items)} exceeds max_batch={config.max_batch}",
            )

    @app.get("/health")
    def health():
        if app.state.ner is None or app.state.embed is None:
            raise HTTPException(status_code=503, detail="loading")
        return {
            "status": "ok",
            "ner_model": app.state.ner.model_id,
            "embed_model": app.state.embed.model_id,
        }

    @app.post("/ner_score")
    def ner_score(request: NerRequest):
        _check_ready()
        _check_batch(request.phrases, "phrase")
        if any(not p.strip() for p in request.phrases):
            raise HTTPException(status_code=400, detail="empty phrase in batch")
        probs = app.state.ner.score(request.phrases)
        return {"probs": probs}

    @app.post("/embed")
    def embed(request: EmbedRequest):
        _check_ready()
        _check_batch(request.texts, "text")
        results = app.state.embed.embed(request.texts)
        return {
            "results": [
                {"tokens": tokens, "vectors": vectors.tolist()}
                for tokens, vectors in results
            ]
        }

    return app
