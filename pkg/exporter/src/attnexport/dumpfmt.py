"""Writer for the .attn attention-dump wire format.

Layout (little-endian):
    bytes 0..8    magic  b"XFATTND1"
    bytes 8..12   version (u32, currently 1)
    bytes 12..16  dtype   (u32: 0 = f32, 1 = f16)
    bytes 16..32  dims N, L, H, S (4 x u32)
    bytes 32..    payload, C-order [step][layer][head][position]

Per-step-reduced tensors are stored with L = H = 1.  The consumer side of
this format lives in the compression package; this module only emits it.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"XFATTND1"
VERSION = 1
_HEADER = struct.Struct("<8sII4I")
HEADER_SIZE = _HEADER.size

_DTYPE_CODES = {"f32": (0, np.dtype("<f4")), "f16": (1, np.dtype("<f2"))}


def dump_bytes(tensor: np.ndarray, dtype: str = "f32") -> bytes:
    """Serialize an [N, L, H, S] float tensor to the dump encoding."""
    if tensor.ndim != 4:
        raise ValueError(f"tensor must be 4-dimensional [N, L, H, S], got {tensor.ndim}")
    if min(tensor.shape) < 1:
        raise ValueError(f"tensor has a zero dimension: {tensor.shape}")
    if dtype not in _DTYPE_CODES:
        raise ValueError(f"unsupported dtype {dtype!r}")
    code, np_dtype = _DTYPE_CODES[dtype]
    n_look, n_layers, n_heads, seq_len = tensor.shape
    header = _HEADER.pack(MAGIC, VERSION, code, n_look, n_layers, n_heads, seq_len)
    return header + np.ascontiguousarray(tensor, dtype=np_dtype).tobytes()


def write_dump(path: str | Path, tensor: np.ndarray, dtype: str = "f32") -> None:
    Path(path).write_bytes(dump_bytes(tensor, dtype))
