"""Draft model loading.

``toy`` (or ``toy:SEED``) builds a deterministic randomly-initialized
2-layer byte-vocabulary model entirely offline; any other id is treated as
a local checkpoint directory.  Attention weights require the eager
implementation, so every load path forces it.
"""

from __future__ import annotations

import torch
from transformers import AutoModelForCausalLM, GPT2Config

from .errors import ModelError

TOY_VOCAB_SIZE = 256


def build_toy_model(seed: int = 0):
    """Tiny GPT-2-shaped model over raw bytes; ~150k parameters."""
    torch.manual_seed(seed)
    config = GPT2Config(
        vocab_size=TOY_VOCAB_SIZE,
        n_positions=4096,
        n_embd=64,
        n_layer=2,
        n_head=2,
        resid_pdrop=0.0,
        embd_pdrop=0.0,
        attn_pdrop=0.0,
        bos_token_id=None,
        eos_token_id=None,
    )
    model = AutoModelForCausalLM.from_config(config, attn_implementation="eager")
    model.eval()
    return model


def load_model(model_id: str):
    """Resolve a model id to an eval-mode model with eager attention."""
    if model_id == "toy":
        return build_toy_model()
    if model_id.startswith("toy:"):
        return build_toy_model(seed=int(model_id.split(":", 1)[1]))
    try:
        model = AutoModelForCausalLM.from_pretrained(model_id, attn_implementation="eager")
    except (OSError, ValueError) as exc:
        raise ModelError(f"cannot load model {model_id!r}: {exc}") from exc
    model.eval()
    return model


def model_dims(model) -> tuple[int, int, int, int]:
    """(layers, heads, max positions, vocab size) from the model config."""
    cfg = model.config
    return (
        cfg.num_hidden_layers,
        cfg.num_attention_heads,
        cfg.max_position_embeddings,
        cfg.vocab_size,
    )


def encode_prompt(model_id: str, text: str) -> list[int]:
    """Prompt-to-ids for CLI use; toy models consume raw UTF-8 bytes."""
    if model_id == "toy" or model_id.startswith("toy:"):
        return list(text.encode("utf-8"))
    from transformers import AutoTokenizer

    tok = AutoTokenizer.from_pretrained(model_id)
    return tok(text)["input_ids"]
