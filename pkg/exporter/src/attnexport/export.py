"""Greedy lookahead attention collection.

After a prompt-only forward pass, the model greedily decodes N tokens; each
generated token's attention row over the S prompt positions (columns for
other generated tokens sliced off) becomes one lookahead step of the
canonical [N, L, H, S] tensor.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .dumpfmt import write_dump
from .errors import AttentionUnavailableError, ContextLengthError, VocabError
from .models import load_model, model_dims

REDUCTION_FULL = "full"
REDUCTION_PER_STEP = "per-step-reduced"
DEFAULT_LOOKAHEAD = 8


@dataclass(frozen=True)
class ExportJob:
    model_id: str
    token_ids: tuple[int, ...]
    n_lookahead: int = DEFAULT_LOOKAHEAD
    reduction: str = REDUCTION_FULL
    out_path: str | None = None

    def __post_init__(self):
        if self.n_lookahead < 1:
            raise ValueError(f"n_lookahead must be >= 1, got {self.n_lookahead}")
        if self.reduction not in (REDUCTION_FULL, REDUCTION_PER_STEP):
            raise ValueError(f"unknown reduction {self.reduction!r}")


def collect_lookahead_attention(model, token_ids, n_lookahead: int) -> np.ndarray:
    """[N, L, H, S] float32 attention of N greedily decoded tokens over the prompt."""
    n_layers, n_heads, max_positions, vocab_size = model_dims(model)
    seq_len = len(token_ids)
    if seq_len < 1:
        raise VocabError("prompt is empty")
    bad = [t for t in token_ids if not (0 <= t < vocab_size)]
    if bad:
        raise VocabError(f"token ids outside vocab of {vocab_size}: {bad[:5]}")
    if seq_len + n_lookahead > max_positions:
        raise ContextLengthError(
            f"prompt of {seq_len} tokens + {n_lookahead} lookahead exceeds the "
            f"model context of {max_positions}; refusing to truncate"
        )

    ids = torch.tensor([list(token_ids)], dtype=torch.long)
    steps: list[torch.Tensor] = []
    with torch.no_grad():
        out = model(ids, use_cache=True)
        next_id = int(out.logits[0, -1].argmax())
        cache = out.past_key_values
        for _ in range(n_lookahead):
            step_out = model(
                torch.tensor([[next_id]], dtype=torch.long),
                past_key_values=cache,
                use_cache=True,
                output_attentions=True,
            )
            if not step_out.attentions:
                raise AttentionUnavailableError(
                    "model returned no attention weights; it must run with the "
                    "eager attention implementation"
                )
            # each layer: [1, H, 1, S + decoded]; keep prompt columns only
            step = torch.stack([layer[0, :, 0, :seq_len] for layer in step_out.attentions])
            steps.append(step)
            cache = step_out.past_key_values
            next_id = int(step_out.logits[0, -1].argmax())

    tensor = torch.stack(steps).numpy().astype(np.float32, copy=False)
    expected = (n_lookahead, n_layers, n_heads, seq_len)
    if tensor.shape != expected:
        raise AttentionUnavailableError(
            f"collected tensor shape {tensor.shape} != expected {expected}"
        )
    return tensor


def reduce_per_step(tensor: np.ndarray) -> np.ndarray:
    """Max over (layer, head), keeping the canonical 4-dim layout."""
    return tensor.max(axis=(1, 2), keepdims=True)


def run_export(job: ExportJob, model=None) -> np.ndarray:
    """Collect (and optionally write) the tensor for one job."""
    model = model if model is not None else load_model(job.model_id)
    tensor = collect_lookahead_attention(model, job.token_ids, job.n_lookahead)
    if job.reduction == REDUCTION_PER_STEP:
        tensor = reduce_per_step(tensor)
    if job.out_path:
        write_dump(Path(job.out_path), tensor)
    return tensor
