"""Per-token importance from draft-model lookahead attention.

The draft model contributes one attention snapshot per lookahead step; each
snapshot covers every layer and head over the S prompt positions.  Importance
is the mean over steps of the per-step max over (layer, head), optionally
smoothed with a count-normalized sliding average.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigError, InvalidInputError


@dataclass(frozen=True)
class LookaheadAttention:
    """Dense attention tensor laid out [lookahead, layer, head, position].

    Values are post-softmax attention mass over the prompt positions only;
    providers slice off any columns for generated lookahead tokens before
    constructing this. A provider that pre-reduces over (layer, head) ships
    the same data with singleton layer/head dims.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 4:
            raise InvalidInputError(
                f"attention tensor must have 4 dims [step, layer, head, pos], got {arr.ndim}"
            )
        if min(arr.shape) < 1:
            raise InvalidInputError(f"attention tensor has a zero dim: {arr.shape}")
        if not np.isfinite(arr).all():
            raise InvalidInputError("attention tensor contains non-finite values")
        if (arr < 0).any():
            raise InvalidInputError("attention tensor contains negative values")
        object.__setattr__(self, "values", arr)

    @property
    def n_lookahead(self) -> int:
        return self.values.shape[0]

    @property
    def n_layers(self) -> int:
        return self.values.shape[1]

    @property
    def n_heads(self) -> int:
        return self.values.shape[2]

    @property
    def seq_len(self) -> int:
        return self.values.shape[3]

    @property
    def is_reduced(self) -> bool:
        """True when layer/head were already collapsed by the producer."""
        return self.n_layers == 1 and self.n_heads == 1


def aggregate_max_mean(attn: LookaheadAttention) -> np.ndarray:
    """Collapse a lookahead tensor to one score per prompt position.

    score[s] = mean over steps of (max over layers and heads at position s).
    On a pre-reduced tensor the max stage is a no-op over singleton dims, so
    both transfer modes land on identical float64 scores.
    """
    per_step_max = attn.values.max(axis=(1, 2)).astype(np.float64)
    return per_step_max.mean(axis=0)


def smooth(scores: np.ndarray, kernel: int) -> np.ndarray:
    """Count-normalized sliding average; same length as the input.

    Edge windows are clipped to the sequence and divided by the number of
    in-range positions, so constant inputs come back unchanged.  ``kernel``
    must be odd, >= 1 and <= len(scores).
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1:
        raise InvalidInputError(f"scores must be one-dimensional, got {scores.ndim} dims")
    seq_len = scores.shape[0]
    if kernel < 1 or kernel % 2 == 0:
        raise InvalidConfigError(f"pooling kernel must be odd and >= 1, got {kernel}")
    if kernel > seq_len:
        raise InvalidConfigError(f"pooling kernel {kernel} exceeds sequence length {seq_len}")
    if kernel == 1:
        return scores.copy()
    window = np.ones(kernel, dtype=np.float64)
    sums = np.convolve(scores, window, mode="same")
    counts = np.convolve(np.ones(seq_len, dtype=np.float64), window, mode="same")
    return sums / counts
