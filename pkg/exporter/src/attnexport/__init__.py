"""Draft-model attention exporter: .attn dumps and the /v1/attention service."""

from .dumpfmt import dump_bytes, write_dump
from .errors import (
    AttentionUnavailableError,
    ContextLengthError,
    ExportError,
    ModelError,
    VocabError,
)
from .export import (
    DEFAULT_LOOKAHEAD,
    ExportJob,
    collect_lookahead_attention,
    reduce_per_step,
    run_export,
)
from .models import build_toy_model, encode_prompt, load_model, model_dims

__version__ = "0.1.0"
