"""Long-running compression service.

POST /v1/compress squeezes a prompt under a keep spec and returns the
compressed text; with an upstream completion endpoint configured, a request
may instead be forwarded after compression and the upstream reply streamed
back.  The service holds only immutable handles, so requests are
independent and safe to run concurrently.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import httpx
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel

from .errors import TransportError, XfamError
from .pipeline import (
    BUILTIN_PROFILES,
    CompressionConfig,
    KeepRateSpec,
    compress,
)
from .providers import AttentionProvider, SyntheticProvider
from .tokenizers import TokenizerHandle, WhitespaceTokenizer

DEFAULT_MAX_INPUT_BYTES = 8 * 1024 * 1024


@dataclass
class ServiceSettings:
    profiles: dict[str, CompressionConfig] = field(
        default_factory=lambda: dict(BUILTIN_PROFILES)
    )
    provider: AttentionProvider = field(default_factory=SyntheticProvider)
    draft_tok: TokenizerHandle = field(default_factory=WhitespaceTokenizer)
    target_tok: TokenizerHandle = field(default_factory=WhitespaceTokenizer)
    max_input_bytes: int = DEFAULT_MAX_INPUT_BYTES
    upstream_url: str | None = None
    # test hook: lets integration tests mount a fake upstream in-process
    upstream_transport: httpx.BaseTransport | None = None


class CompressRequest(BaseModel):
    text: str
    profile: str = "default"
    keep_rate: float | None = None
    target_length: int | None = None
    block_align: int | None = None  # 0 disables alignment; omitted -> default
    forward: bool = False


class CompressResponse(BaseModel):
    text: str
    token_count: int
    keep_rate: float


def _keep_spec(req: CompressRequest) -> KeepRateSpec:
    if req.keep_rate is not None and req.target_length is not None:
        raise HTTPException(400, "give either keep_rate or target_length, not both")
    if req.target_length is not None:
        if req.block_align is None:
            return KeepRateSpec.target_length(req.target_length)
        align = None if req.block_align == 0 else req.block_align
        return KeepRateSpec.target_length(req.target_length, block_align=align)
    return KeepRateSpec.fraction(req.keep_rate if req.keep_rate is not None else 1.0)


def create_app(settings: ServiceSettings | None = None) -> FastAPI:
    settings = settings or ServiceSettings()
    app = FastAPI(title="xfam compression service")

    @app.exception_handler(XfamError)
    async def _xfam_error(_req: Request, exc: XfamError):
        status = 502 if isinstance(exc, TransportError) else 400
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/v1/compress")
    def compress_endpoint(req: CompressRequest):
        if len(req.text.encode("utf-8")) > settings.max_input_bytes:
            raise HTTPException(413, f"input exceeds {settings.max_input_bytes} bytes")
        base = settings.profiles.get(req.profile)
        if base is None:
            raise HTTPException(400, f"unknown profile {req.profile!r}")
        cfg = dataclasses.replace(base, keep=_keep_spec(req))
        result = compress(
            req.text, cfg, settings.provider, settings.draft_tok, settings.target_tok
        )

        if req.forward:
            if not settings.upstream_url:
                raise HTTPException(400, "no upstream completion endpoint configured")
            return _forward_upstream(settings, result.text)

        return CompressResponse(
            text=result.text,
            token_count=result.stats.target_tokens_compressed,
            keep_rate=result.achieved_keep_rate,
        )

    return app


def _forward_upstream(settings: ServiceSettings, compressed_text: str) -> StreamingResponse:
    client = httpx.Client(transport=settings.upstream_transport, timeout=120.0)
    try:
        upstream = client.send(
            client.build_request(
                "POST", settings.upstream_url, json={"prompt": compressed_text}
            ),
            stream=True,
        )
    except httpx.TransportError as exc:
        client.close()
        raise HTTPException(502, f"upstream unreachable: {exc}") from exc

    def body():
        try:
            yield from upstream.iter_bytes()
        finally:
            upstream.close()
            client.close()

    media_type = upstream.headers.get("content-type", "application/octet-stream")
    return StreamingResponse(body(), status_code=upstream.status_code, media_type=media_type)


def serve(bind: str = "127.0.0.1:8080", settings: ServiceSettings | None = None) -> None:
    """Run the service under uvicorn until interrupted."""
    import uvicorn

    host, _, port = bind.partition(":")
    uvicorn.run(create_app(settings), host=host or "127.0.0.1", port=int(port or 8080))
