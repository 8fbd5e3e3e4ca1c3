"""End-to-end prompt compression.

Keep rate is defined against the target tokenizer, applied as a token
budget in the draft domain, and the surviving spans are re-assembled as
text, re-tokenized for the target, and given fresh contiguous position IDs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from . import chunks as chunking
from .assembly import TokenizationWithOffsets, assemble, map_spans_to_byte_ranges
from .chunks import SelectedSpans
from .errors import EmptySelectionError, InvalidConfigError, InvalidInputError
from .importance import aggregate_max_mean, smooth
from .providers import AttentionProvider, AttentionRequest
from .tokenizers import TokenizerHandle

DEFAULT_BLOCK_ALIGN = 4096


@dataclass(frozen=True)
class KeepRateSpec:
    """Either a keep fraction or a desired target-side length.

    With ``block_align`` set, a requested length is rounded to the nearest
    block multiple (ties up), never below one block, so compressed budgets
    line up with KV-cache paging.
    """

    rho: float | None = None
    target_tokens: int | None = None
    block_align: int | None = DEFAULT_BLOCK_ALIGN

    def __post_init__(self):
        if (self.rho is None) == (self.target_tokens is None):
            raise InvalidConfigError("exactly one of rho / target_tokens must be set")
        if self.rho is not None and not (0.0 < self.rho <= 1.0):
            raise InvalidConfigError(f"keep fraction must be in (0, 1], got {self.rho}")
        if self.target_tokens is not None and self.target_tokens < 1:
            raise InvalidConfigError(f"target length must be >= 1, got {self.target_tokens}")
        if self.block_align is not None and self.block_align < 1:
            raise InvalidConfigError(f"block_align must be >= 1, got {self.block_align}")

    @classmethod
    def fraction(cls, rho: float) -> "KeepRateSpec":
        return cls(rho=rho, block_align=None)

    @classmethod
    def target_length(
        cls, tokens: int, block_align: int | None = DEFAULT_BLOCK_ALIGN
    ) -> "KeepRateSpec":
        return cls(target_tokens=tokens, block_align=block_align)

    def aligned_target(self) -> int | None:
        """Requested length after block alignment, or None in fraction mode."""
        if self.target_tokens is None:
            return None
        if self.block_align is None:
            return self.target_tokens
        block = self.block_align
        return block * max(1, (self.target_tokens + block // 2) // block)


@dataclass(frozen=True)
class CompressionConfig:
    """Tunables for one compression profile."""

    n_lookahead: int = 8
    chunk_size: int = 32
    pooling_kernel: int = 13
    delimiter: str = "[...]"
    forced_tail_tokens: int | None = None  # None -> one chunk
    keep: KeepRateSpec = field(default_factory=lambda: KeepRateSpec.fraction(1.0))
    slack: float = 0.1  # tolerated cross-tokenizer overshoot of the target length

    def __post_init__(self):
        if self.n_lookahead < 1:
            raise InvalidConfigError("n_lookahead must be >= 1")
        if self.chunk_size < 1:
            raise InvalidConfigError("chunk_size must be >= 1")
        if self.pooling_kernel < 1 or self.pooling_kernel % 2 == 0:
            raise InvalidConfigError("pooling_kernel must be odd and >= 1")
        if not self.delimiter:
            raise InvalidConfigError("delimiter must be non-empty")
        if self.forced_tail_tokens is not None and self.forced_tail_tokens < 0:
            raise InvalidConfigError("forced_tail_tokens must be >= 0")
        if self.slack < 0:
            raise InvalidConfigError("slack must be >= 0")

    @property
    def tail_tokens(self) -> int:
        return self.chunk_size if self.forced_tail_tokens is None else self.forced_tail_tokens


CODE_PROFILE = CompressionConfig(chunk_size=128, delimiter="// omitted")

BUILTIN_PROFILES: dict[str, CompressionConfig] = {
    "default": CompressionConfig(),
    "code": CODE_PROFILE,
}


@dataclass(frozen=True)
class CompressionStats:
    draft_tokens: int
    target_tokens_original: int
    target_tokens_compressed: int
    chunks_total: int
    chunks_selected: int
    segment_count: int
    delimiter_count: int
    rho_requested: float
    refinement_passes: int = 0
    stage_ms: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class CompressedPrompt:
    text: str
    target_token_ids: tuple[int, ...]
    position_ids: tuple[int, ...]
    achieved_keep_rate: float
    draft_spans: SelectedSpans
    stats: CompressionStats


def assign_position_ids(target_token_ids) -> tuple[int, ...]:
    """Fresh contiguous positions 0..len-1; original indices are not restored."""
    return tuple(range(len(target_token_ids)))


def compute_keep_rate(target_len: int, spec: KeepRateSpec) -> float:
    """Requested keep fraction for a prompt of ``target_len`` target tokens."""
    if target_len < 1:
        raise InvalidInputError(f"target length must be >= 1, got {target_len}")
    if spec.rho is not None:
        return spec.rho
    return min(1.0, spec.aligned_target() / target_len)


class _StageClock:
    def __init__(self):
        self.stage_ms: dict[str, float] = {}
        self._t = time.perf_counter()

    def lap(self, name: str) -> None:
        now = time.perf_counter()
        self.stage_ms[name] = self.stage_ms.get(name, 0.0) + (now - self._t) * 1000.0
        self._t = now


def _content_count(enc: TokenizationWithOffsets) -> int:
    """Tokens that map to text; specials with empty offsets don't count."""
    return sum(1 for start, end in enc.offsets if end > start)


def _passthrough(
    text: str,
    target_tok: TokenizerHandle,
    target_len: int,
    rho: float,
    draft_len: int,
    clock: _StageClock,
) -> CompressedPrompt:
    """Return the prompt unchanged (full keep or degenerate input)."""
    enc = target_tok.encode_with_offsets(text)
    ids = enc.token_ids
    clock.lap("target_tokenize")
    spans = SelectedSpans(((0, draft_len),)) if draft_len else SelectedSpans(())
    stats = CompressionStats(
        draft_tokens=draft_len,
        target_tokens_original=target_len,
        target_tokens_compressed=_content_count(enc),
        chunks_total=0,
        chunks_selected=0,
        segment_count=1,
        delimiter_count=0,
        rho_requested=rho,
        stage_ms=clock.stage_ms,
    )
    return CompressedPrompt(
        text=text,
        target_token_ids=tuple(ids),
        position_ids=assign_position_ids(ids),
        achieved_keep_rate=1.0,
        draft_spans=spans,
        stats=stats,
    )


def compress(
    prompt_text: str,
    config: CompressionConfig,
    provider: AttentionProvider,
    draft_tok: TokenizerHandle,
    target_tok: TokenizerHandle,
) -> CompressedPrompt:
    """Run the full draft-scored compression chain on one prompt.

    Raises on empty prompts and propagates provider transport errors; a
    prompt shorter than one chunk (or than the forced tail) is returned
    unchanged with keep rate 1.
    """
    if not prompt_text:
        raise InvalidInputError("prompt is empty")

    clock = _StageClock()
    target_len = target_tok.count_tokens(prompt_text)
    if target_len < 1:
        raise InvalidInputError("prompt has no target-side tokens")
    rho = compute_keep_rate(target_len, config.keep)
    clock.lap("target_count")

    draft_enc = draft_tok.encode_with_offsets(prompt_text)
    seq_len = len(draft_enc)
    lead = draft_enc.leading_special_count
    content_len = seq_len - lead
    clock.lap("draft_tokenize")

    # Degenerate prompts and full keep bypass compression entirely.
    if rho >= 1.0 or content_len <= config.chunk_size or content_len <= config.tail_tokens:
        return _passthrough(prompt_text, target_tok, target_len, rho, seq_len, clock)

    if rho * content_len < 1.0:
        raise EmptySelectionError(
            f"keep rate {rho:.6f} admits no draft token out of {content_len}"
        )

    req = AttentionRequest(
        draft_token_ids=draft_enc.token_ids,
        n_lookahead=config.n_lookahead,
        reduction=provider.preferred_reduction,
    )
    attn = provider.provide(req)
    if attn.seq_len != seq_len:
        raise InvalidInputError(
            f"provider returned {attn.seq_len} positions for {seq_len} draft tokens"
        )
    clock.lap("provide")

    raw_scores = aggregate_max_mean(attn)[lead:]
    kernel = min(config.pooling_kernel, content_len)
    if kernel % 2 == 0:
        kernel -= 1
    smoothed = smooth(raw_scores, kernel)
    clock.lap("score")

    ranges = chunking.partition(content_len, config.chunk_size)
    scored = chunking.score_chunks(smoothed, ranges)
    budget = math.ceil(rho * content_len)
    forced_tail = min(config.tail_tokens, budget)
    selected = chunking.select_top_k(scored, budget, forced_tail)
    clock.lap("select")

    # Indices of chunks the refinement loop may drop: lowest score first,
    # never a forced-tail chunk.
    tail_start = content_len - forced_tail
    droppable = sorted(
        (idx for idx in selected if scored[idx].end <= tail_start),
        key=lambda idx: (scored[idx].score, -idx),
    )

    prompt_bytes = prompt_text.encode("utf-8")
    # Refinement converges toward an explicit requested length; fraction mode
    # has no such anchor and relies on the draft-side budget alone.
    requested_len = config.keep.aligned_target()
    limit = requested_len * (1.0 + config.slack) if requested_len is not None else None

    passes = 0
    while True:
        spans = chunking.merge_adjacent(selected, ranges).shifted(lead)
        byte_ranges = map_spans_to_byte_ranges(draft_enc, spans, prompt_bytes)
        assembled = assemble(prompt_bytes, byte_ranges, config.delimiter)
        target_enc = target_tok.encode_with_offsets(assembled.text)
        compressed_len = _content_count(target_enc)
        if limit is None or compressed_len <= limit or passes >= 3:
            break
        if not droppable or len(selected) <= 1:
            break
        selected = selected - {droppable.pop(0)}
        passes += 1
    clock.lap("assemble")

    stats = CompressionStats(
        draft_tokens=seq_len,
        target_tokens_original=target_len,
        target_tokens_compressed=compressed_len,
        chunks_total=len(ranges),
        chunks_selected=len(selected),
        segment_count=assembled.segment_count,
        delimiter_count=assembled.delimiter_count,
        rho_requested=rho,
        refinement_passes=passes,
        stage_ms=clock.stage_ms,
    )
    return CompressedPrompt(
        text=assembled.text,
        target_token_ids=tuple(target_enc.token_ids),
        position_ids=assign_position_ids(target_enc.token_ids),
        achieved_keep_rate=compressed_len / target_len,
        draft_spans=spans,
        stats=stats,
    )
