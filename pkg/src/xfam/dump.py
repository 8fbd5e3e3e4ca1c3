"""Binary .attn dump format for lookahead attention tensors.

Layout (little-endian):
    bytes 0..8    magic  b"XFATTND1"
    bytes 8..12   version (u32, currently 1)
    bytes 12..16  dtype   (u32: 0 = f32, 1 = f16)
    bytes 16..32  dims N, L, H, S (4 x u32)
    bytes 32..    payload, C-order [step][layer][head][position]

A per-step-reduced tensor is stored with L = H = 1.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DumpCorruptionError, DumpFormatError
from .importance import LookaheadAttention

MAGIC = b"XFATTND1"
VERSION = 1
_HEADER = struct.Struct("<8sII4I")
HEADER_SIZE = _HEADER.size

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f2")}
_DTYPE_NAMES = {"f32": 0, "f16": 1}


def dump_bytes(attn: LookaheadAttention, dtype: str = "f32") -> bytes:
    """Serialize a tensor to the canonical dump encoding."""
    if dtype not in _DTYPE_NAMES:
        raise DumpFormatError(f"unsupported dump dtype {dtype!r}")
    code = _DTYPE_NAMES[dtype]
    header = _HEADER.pack(
        MAGIC,
        VERSION,
        code,
        attn.n_lookahead,
        attn.n_layers,
        attn.n_heads,
        attn.seq_len,
    )
    payload = np.ascontiguousarray(attn.values, dtype=_DTYPE_CODES[code]).tobytes()
    return header + payload


def write_dump(path: str | Path, attn: LookaheadAttention, dtype: str = "f32") -> None:
    Path(path).write_bytes(dump_bytes(attn, dtype))


def _parse_header(raw: bytes) -> tuple[np.dtype, tuple[int, int, int, int], int]:
    if len(raw) < HEADER_SIZE:
        raise DumpFormatError(f"dump shorter than header: {len(raw)} bytes")
    magic, version, code, n_look, n_layers, n_heads, seq_len = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DumpFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise DumpFormatError(f"unsupported dump version {version}")
    if code not in _DTYPE_CODES:
        raise DumpFormatError(f"unknown dtype code {code}")
    dims = (n_look, n_layers, n_heads, seq_len)
    if min(dims) < 1:
        raise DumpFormatError(f"zero dimension in header: {dims}")
    return _DTYPE_CODES[code], dims, n_look * n_layers * n_heads * seq_len


def read_dump_bytes(raw: bytes) -> LookaheadAttention:
    """Decode a dump held fully in memory; f16 payloads widen to f32."""
    dtype, dims, count = _parse_header(raw)
    expected = HEADER_SIZE + count * dtype.itemsize
    if len(raw) != expected:
        raise DumpCorruptionError(
            f"payload length {len(raw) - HEADER_SIZE} != expected {expected - HEADER_SIZE}"
        )
    flat = np.frombuffer(raw, dtype=dtype, count=count, offset=HEADER_SIZE)
    return LookaheadAttention(flat.astype(np.float32).reshape(dims))


def read_dump(path: str | Path, use_mmap: bool = False) -> LookaheadAttention:
    """Read a dump file; with ``use_mmap`` an f32 payload stays mapped read-only."""
    path = Path(path)
    if not use_mmap:
        return read_dump_bytes(path.read_bytes())
    with open(path, "rb") as fh:
        dtype, dims, count = _parse_header(fh.read(HEADER_SIZE))
    expected = HEADER_SIZE + count * dtype.itemsize
    actual = path.stat().st_size
    if actual != expected:
        raise DumpCorruptionError(f"file size {actual} != expected {expected}")
    flat = np.memmap(path, dtype=dtype, mode="r", offset=HEADER_SIZE, shape=(count,))
    if dtype.itemsize == 2:
        flat = flat.astype(np.float32)
    return LookaheadAttention(flat.reshape(dims))
