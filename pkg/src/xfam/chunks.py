"""Chunk partitioning, scoring, budgeted top-K selection, and span merging.

The draft sequence is tiled into fixed-size chunks (ragged tail allowed),
each chunk scored by its mean smoothed importance, and chunks admitted
greedily by score under a token budget.  Adjacent winners merge into spans.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    BudgetClampWarning,
    EmptySelectionError,
    InvalidConfigError,
    InvalidInputError,
)


@dataclass(frozen=True)
class ChunkScore:
    """One selection unit: a half-open token range and its mean importance."""

    index: int
    start: int
    end: int
    score: float


@dataclass(frozen=True)
class SelectedSpans:
    """Sorted, disjoint, non-adjacent half-open token intervals."""

    spans: tuple[tuple[int, int], ...]

    def __post_init__(self):
        prev_end = None
        for start, end in self.spans:
            if end <= start:
                raise InvalidInputError(f"empty or inverted span ({start}, {end})")
            if prev_end is not None and start <= prev_end:
                raise InvalidInputError("spans must be sorted, disjoint, and non-adjacent")
            prev_end = end

    @property
    def kept_tokens(self) -> int:
        return sum(end - start for start, end in self.spans)

    def shifted(self, offset: int) -> "SelectedSpans":
        return SelectedSpans(tuple((s + offset, e + offset) for s, e in self.spans))


def partition(seq_len: int, chunk_size: int) -> list[tuple[int, int]]:
    """Tile [0, seq_len) into ceil(seq_len / chunk_size) contiguous ranges."""
    if chunk_size < 1:
        raise InvalidConfigError(f"chunk_size must be >= 1, got {chunk_size}")
    if seq_len < 0:
        raise InvalidInputError(f"seq_len must be >= 0, got {seq_len}")
    return [(start, min(start + chunk_size, seq_len)) for start in range(0, seq_len, chunk_size)]


def score_chunks(scores: np.ndarray, ranges: list[tuple[int, int]]) -> list[ChunkScore]:
    """Mean smoothed importance over each range."""
    scores = np.asarray(scores, dtype=np.float64)
    seq_len = scores.shape[0]
    out = []
    for idx, (start, end) in enumerate(ranges):
        if start < 0 or end > seq_len or end <= start:
            raise InvalidInputError(f"chunk range ({start}, {end}) outside [0, {seq_len})")
        out.append(ChunkScore(idx, start, end, float(scores[start:end].mean())))
    return out


def select_top_k(
    chunks: list[ChunkScore],
    budget_tokens: int,
    forced_tail_tokens: int = 0,
) -> set[int]:
    """Pick chunk indices under a draft-token budget.

    Chunks covering the final ``forced_tail_tokens`` positions are always in.
    The rest are admitted in descending score order (ties to the lower index)
    while the running total is still under budget, so the final admitted
    chunk may overshoot by at most one chunk length minus one.
    """
    if not chunks:
        raise InvalidInputError("no chunks to select from")
    seq_len = chunks[-1].end
    if budget_tokens < 1:
        raise InvalidConfigError(f"budget_tokens must be >= 1, got {budget_tokens}")
    if budget_tokens > seq_len:
        warnings.warn(
            f"budget {budget_tokens} exceeds sequence length {seq_len}; clamping",
            BudgetClampWarning,
            stacklevel=2,
        )
        budget_tokens = seq_len
    if forced_tail_tokens > budget_tokens:
        raise InvalidConfigError(
            f"forced_tail_tokens {forced_tail_tokens} exceeds budget {budget_tokens}"
        )

    selected: set[int] = set()
    kept = 0
    if forced_tail_tokens > 0:
        tail_start = seq_len - forced_tail_tokens
        for chunk in chunks:
            if chunk.end > tail_start:
                selected.add(chunk.index)
                kept += chunk.end - chunk.start

    for chunk in sorted(chunks, key=lambda ch: (-ch.score, ch.index)):
        if kept >= budget_tokens:
            break
        if chunk.index in selected:
            continue
        selected.add(chunk.index)
        kept += chunk.end - chunk.start
    return selected


def merge_adjacent(selected: set[int], ranges: list[tuple[int, int]]) -> SelectedSpans:
    """Collapse maximal runs of consecutive chunk indices into single spans."""
    if not selected:
        raise EmptySelectionError("selection is empty; nothing to merge")
    spans: list[list[int]] = []
    for idx in sorted(selected):
        if idx < 0 or idx >= len(ranges):
            raise InvalidInputError(f"selected chunk index {idx} out of range")
        start, end = ranges[idx]
        if spans and spans[-1][1] == start:
            spans[-1][1] = end
        else:
            spans.append([start, end])
    return SelectedSpans(tuple((s, e) for s, e in spans))
