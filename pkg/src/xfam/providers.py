"""Sources of lookahead attention: synthetic, file dump, and remote HTTP.

Scoring needs only the per-position layer/head max per step, so providers
may transfer a per-step-reduced [N, 1, 1, S] tensor instead of the full
[N, L, H, S] one; max commutes ahead of the lookahead mean, making the
reduced mode lossless for max-mean aggregation.
"""

from __future__ import annotations

import time
from abc import ABC, abstractmethod
from dataclasses import dataclass

import httpx
import numpy as np

from .dump import read_dump, read_dump_bytes
from .errors import (
    ContextOverflowError,
    InvalidInputError,
    ProtocolError,
    TransportError,
)
from .importance import LookaheadAttention

REDUCTION_FULL = "full"
REDUCTION_PER_STEP = "per-step-reduced"
DEFAULT_LOOKAHEAD = 8


@dataclass(frozen=True)
class AttentionRequest:
    draft_token_ids: tuple[int, ...]
    n_lookahead: int = DEFAULT_LOOKAHEAD
    reduction: str = REDUCTION_FULL

    def __post_init__(self):
        if self.n_lookahead < 1:
            raise InvalidInputError(f"n_lookahead must be >= 1, got {self.n_lookahead}")
        if self.reduction not in (REDUCTION_FULL, REDUCTION_PER_STEP):
            raise InvalidInputError(f"unknown reduction {self.reduction!r}")
        object.__setattr__(self, "draft_token_ids", tuple(self.draft_token_ids))


def reduce_per_step(attn: LookaheadAttention) -> LookaheadAttention:
    """Collapse layer/head to their max, keeping the [N, 1, 1, S] layout."""
    reduced = attn.values.max(axis=(1, 2), keepdims=True)
    return LookaheadAttention(reduced)


class AttentionProvider(ABC):
    """Shareable handle; provide() may be called concurrently."""

    preferred_reduction: str = REDUCTION_FULL

    @abstractmethod
    def provide(self, req: AttentionRequest) -> LookaheadAttention: ...


class SyntheticProvider(AttentionProvider):
    """Deterministic seeded tensors for tests and benchmarks.

    Background positions get ``background`` mass plus uniform noise below
    ``noise``; positions inside ``needle_token_spans`` get ``needle_value``,
    so chunks covering a needle always outrank the background.
    """

    def __init__(
        self,
        seed: int = 0,
        n_layers: int = 2,
        n_heads: int = 2,
        background: float = 0.01,
        noise: float = 0.005,
        needle_value: float = 1.0,
        needle_token_spans: tuple[tuple[int, int], ...] = (),
        max_context: int | None = None,
        reduction: str = REDUCTION_FULL,
    ):
        self.seed = seed
        self.n_layers = n_layers
        self.n_heads = n_heads
        self.background = background
        self.noise = noise
        self.needle_value = needle_value
        self.needle_token_spans = tuple(needle_token_spans)
        self.max_context = max_context
        self.preferred_reduction = reduction

    def provide(self, req: AttentionRequest) -> LookaheadAttention:
        seq_len = len(req.draft_token_ids)
        if seq_len < 1:
            raise InvalidInputError("cannot synthesize attention for an empty sequence")
        if self.max_context is not None and seq_len > self.max_context:
            raise ContextOverflowError(
                f"sequence of {seq_len} tokens exceeds draft context {self.max_context}"
            )
        rng = np.random.default_rng(self.seed)
        shape = (req.n_lookahead, self.n_layers, self.n_heads, seq_len)
        values = self.background + self.noise * rng.random(shape, dtype=np.float32)
        for start, end in self.needle_token_spans:
            values[:, :, :, max(0, start) : min(seq_len, end)] = self.needle_value
        full = LookaheadAttention(values)
        if req.reduction == REDUCTION_PER_STEP:
            return reduce_per_step(full)
        return full


class FileProvider(AttentionProvider):
    """Serve a tensor previously exported to a .attn dump (memory-mapped)."""

    def __init__(self, path: str):
        self.path = path

    def provide(self, req: AttentionRequest) -> LookaheadAttention:
        attn = read_dump(self.path, use_mmap=True)
        if attn.seq_len != len(req.draft_token_ids):
            raise ProtocolError(
                f"dump covers {attn.seq_len} positions but request has "
                f"{len(req.draft_token_ids)} tokens"
            )
        if attn.n_lookahead != req.n_lookahead:
            raise ProtocolError(
                f"dump has {attn.n_lookahead} lookahead steps, request wants {req.n_lookahead}"
            )
        if req.reduction == REDUCTION_PER_STEP and not attn.is_reduced:
            return reduce_per_step(attn)
        if req.reduction == REDUCTION_FULL and attn.is_reduced:
            raise ProtocolError("dump is per-step-reduced; full tensor unavailable")
        return attn


class HTTPProvider(AttentionProvider):
    """Client for a remote exporter speaking POST /v1/attention."""

    def __init__(
        self,
        base_url: str,
        draft_model_id: str = "",
        reduction: str = REDUCTION_PER_STEP,
        retries: int = 2,
        backoff_s: float = 0.2,
        timeout_s: float = 120.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.draft_model_id = draft_model_id
        self.preferred_reduction = reduction
        self.retries = retries
        self.backoff_s = backoff_s
        self._client = httpx.Client(
            base_url=self.base_url, timeout=timeout_s, transport=transport
        )

    def provide(self, req: AttentionRequest) -> LookaheadAttention:
        body = {
            "draft_model_id": self.draft_model_id,
            "token_ids": list(req.draft_token_ids),
            "n_lookahead": req.n_lookahead,
            "reduction": req.reduction,
        }
        attempts = 0
        last_exc: Exception | None = None
        while attempts <= self.retries:
            attempts += 1
            try:
                resp = self._client.post("/v1/attention", json=body)
                if 400 <= resp.status_code < 500:
                    raise ProtocolError(
                        f"attention endpoint rejected request: {resp.status_code} {resp.text[:200]}"
                    )
                resp.raise_for_status()
                attn = read_dump_bytes(resp.content)
                if attn.seq_len != len(req.draft_token_ids):
                    raise ProtocolError(
                        f"remote tensor covers {attn.seq_len} positions, "
                        f"request has {len(req.draft_token_ids)}"
                    )
                return attn
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                last_exc = exc
                if attempts <= self.retries:
                    time.sleep(self.backoff_s * attempts)
        raise TransportError(
            f"attention endpoint unreachable after {attempts} attempts: {last_exc}",
            attempts=attempts,
        )
