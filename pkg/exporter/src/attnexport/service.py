"""HTTP provider endpoint: POST /v1/attention -> octet-stream .attn dump.

One model instance serves all requests; forward passes run serialized
behind a lock, and requests beyond the queue limit get 429 + Retry-After.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .dumpfmt import dump_bytes
from .errors import ExportError
from .export import (
    DEFAULT_LOOKAHEAD,
    REDUCTION_FULL,
    REDUCTION_PER_STEP,
    collect_lookahead_attention,
    reduce_per_step,
)
from .models import load_model


class AttentionBody(BaseModel):
    draft_model_id: str = ""
    token_ids: list[int] = Field(min_length=1)
    n_lookahead: int = DEFAULT_LOOKAHEAD
    reduction: str = REDUCTION_FULL


def create_app(model_id: str = "toy", model=None, max_pending: int = 16) -> FastAPI:
    model = model if model is not None else load_model(model_id)
    app = FastAPI(title="attention exporter")
    forward_lock = threading.Lock()
    gate = threading.Lock()
    pending = 0

    @app.exception_handler(ExportError)
    async def _export_error(_req: Request, exc: ExportError):
        return JSONResponse(
            status_code=400, content={"error": type(exc).__name__, "detail": str(exc)}
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "model": model_id}

    @app.post("/v1/attention")
    def attention(body: AttentionBody):
        nonlocal pending
        if body.n_lookahead < 1:
            return JSONResponse(status_code=400, content={"error": "bad n_lookahead"})
        if body.reduction not in (REDUCTION_FULL, REDUCTION_PER_STEP):
            return JSONResponse(
                status_code=400, content={"error": f"bad reduction {body.reduction!r}"}
            )
        with gate:
            if pending >= max_pending:
                return JSONResponse(
                    status_code=429,
                    content={"error": "exporter overloaded"},
                    headers={"Retry-After": "1"},
                )
            pending += 1
        try:
            with forward_lock:
                tensor = collect_lookahead_attention(
                    model, tuple(body.token_ids), body.n_lookahead
                )
            if body.reduction == REDUCTION_PER_STEP:
                tensor = reduce_per_step(tensor)
            return Response(content=dump_bytes(tensor), media_type="application/octet-stream")
        finally:
            with gate:
                pending -= 1

    return app


def serve(model_id: str, host: str = "127.0.0.1", port: int = 8070) -> None:
    import uvicorn

    uvicorn.run(create_app(model_id), host=host, port=port)
