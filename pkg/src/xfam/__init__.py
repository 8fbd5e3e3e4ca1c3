"""Cross-family speculative prefill: draft-attention prompt compression.

A small draft model scores every prompt position via its lookahead
attention; high-importance chunks survive, are re-assembled as text with
delimiters at the cuts, re-tokenized for an arbitrary target model, and
emitted with fresh contiguous position IDs.
"""

from .assembly import (
    AssembledText,
    TokenizationWithOffsets,
    assemble,
    map_spans_to_byte_ranges,
)
from .chunks import (
    ChunkScore,
    SelectedSpans,
    merge_adjacent,
    partition,
    score_chunks,
    select_top_k,
)
from .dump import read_dump, read_dump_bytes, write_dump
from .errors import (
    BudgetClampWarning,
    CapabilityError,
    ContextOverflowError,
    DumpCorruptionError,
    DumpFormatError,
    EmptySelectionError,
    InvalidConfigError,
    InvalidInputError,
    ProtocolError,
    TransportError,
    XfamError,
)
from .importance import LookaheadAttention, aggregate_max_mean, smooth
from .pipeline import (
    BUILTIN_PROFILES,
    CompressedPrompt,
    CompressionConfig,
    CompressionStats,
    KeepRateSpec,
    assign_position_ids,
    compress,
    compute_keep_rate,
)
from .providers import (
    AttentionProvider,
    AttentionRequest,
    FileProvider,
    HTTPProvider,
    SyntheticProvider,
    reduce_per_step,
)
from .tokenizers import (
    ByteTokenizer,
    FileTokenizer,
    TokenizerHandle,
    WhitespaceTokenizer,
    load_tokenizer,
)

__version__ = "0.1.0"
