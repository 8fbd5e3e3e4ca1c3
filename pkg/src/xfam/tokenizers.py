"""Uniform tokenizer interface for the draft and target sides.

Two dependency-free test doubles (whitespace words, fixed-width bytes) let
the whole pipeline run without model assets; real tokenizer-definition
files load through the optional ``tokenizers`` adapter.  All offsets are
byte positions into the UTF-8 encoding of the input.
"""

from __future__ import annotations

import threading
from abc import ABC, abstractmethod

from .assembly import TokenizationWithOffsets
from .errors import CapabilityError, InvalidInputError

_BOS_ID = 0


class TokenizerHandle(ABC):
    """Immutable, thread-shareable handle over one tokenizer."""

    family_id: str = "unknown"
    vocab_size: int = 0
    supports_offsets: bool = True

    @abstractmethod
    def _encode(self, text: str) -> TokenizationWithOffsets: ...

    @abstractmethod
    def decode(self, token_ids: list[int]) -> str: ...

    def encode_with_offsets(self, text: str) -> TokenizationWithOffsets:
        if not self.supports_offsets:
            raise CapabilityError(f"tokenizer {self.family_id} does not expose offsets")
        return self._encode(text)

    def count_tokens(self, text: str) -> int:
        """Number of content tokens; specials (empty offsets) excluded."""
        enc = self._encode(text)
        return sum(1 for start, end in enc.offsets if end > start)


class WhitespaceTokenizer(TokenizerHandle):
    """Word tokenizer double: tokens are maximal runs of non-whitespace bytes.

    IDs come from a per-instance vocabulary that grows as new words appear;
    decode joins words with single spaces, so decode(encode(x)) == x exactly
    on single-space-separated input and is re-encode-stable on any input.
    """

    family_id = "whitespace-double"

    def __init__(self, add_bos: bool = False):
        self.add_bos = add_bos
        self._lock = threading.Lock()
        self._word_to_id: dict[bytes, int] = {}
        self._id_to_word: list[bytes] = []
        if add_bos:
            self._word_to_id[b"<bos>"] = _BOS_ID
            self._id_to_word.append(b"<bos>")

    @property
    def vocab_size(self) -> int:  # type: ignore[override]
        return len(self._id_to_word)

    def _intern(self, word: bytes) -> int:
        with self._lock:
            token_id = self._word_to_id.get(word)
            if token_id is None:
                token_id = len(self._id_to_word)
                self._word_to_id[word] = token_id
                self._id_to_word.append(word)
            return token_id

    def _encode(self, text: str) -> TokenizationWithOffsets:
        data = text.encode("utf-8")
        token_ids: list[int] = []
        offsets: list[tuple[int, int]] = []
        if self.add_bos:
            token_ids.append(_BOS_ID)
            offsets.append((0, 0))
        pos = 0
        while pos < len(data):
            if data[pos : pos + 1].isspace():
                pos += 1
                continue
            start = pos
            while pos < len(data) and not data[pos : pos + 1].isspace():
                pos += 1
            token_ids.append(self._intern(data[start:pos]))
            offsets.append((start, pos))
        return TokenizationWithOffsets(tuple(token_ids), tuple(offsets), len(data))

    def decode(self, token_ids: list[int]) -> str:
        words = []
        for token_id in token_ids:
            if self.add_bos and token_id == _BOS_ID:
                continue
            if token_id < 0 or token_id >= len(self._id_to_word):
                raise InvalidInputError(f"unknown token id {token_id}")
            words.append(self._id_to_word[token_id])
        return b" ".join(words).decode("utf-8")


class ByteTokenizer(TokenizerHandle):
    """Byte tokenizer double: one token per ``width`` UTF-8 bytes.

    With width 1 the token id is the byte value, which matches toy models
    built over a 256-entry vocabulary.
    """

    family_id = "byte-double"

    def __init__(self, width: int = 1, add_bos: bool = False):
        if width < 1:
            raise InvalidInputError(f"byte width must be >= 1, got {width}")
        self.width = width
        self.add_bos = add_bos
        self.vocab_size = 256**width + (1 if add_bos else 0)
        self._bos_id = 256**width if add_bos else None

    def _encode(self, text: str) -> TokenizationWithOffsets:
        data = text.encode("utf-8")
        token_ids: list[int] = []
        offsets: list[tuple[int, int]] = []
        if self.add_bos:
            token_ids.append(self._bos_id)
            offsets.append((0, 0))
        for start in range(0, len(data), self.width):
            chunk = data[start : start + self.width]
            token_ids.append(int.from_bytes(chunk, "big"))
            offsets.append((start, start + len(chunk)))
        return TokenizationWithOffsets(tuple(token_ids), tuple(offsets), len(data))

    def decode(self, token_ids: list[int]) -> str:
        pieces = []
        for token_id in token_ids:
            if token_id == self._bos_id:
                continue
            length = max(1, (token_id.bit_length() + 7) // 8)
            pieces.append(token_id.to_bytes(max(length, 1), "big"))
        return b"".join(pieces).decode("utf-8")


class FileTokenizer(TokenizerHandle):
    """Adapter over a tokenizer-definition file (tokenizer.json).

    Requires the optional ``tokenizers`` package.  Character offsets from
    the library are converted to byte offsets; special tokens get empty
    offsets pinned at the previous token's end so byte_start stays
    monotone.
    """

    def __init__(self, path: str, family_id: str | None = None):
        try:
            from tokenizers import Tokenizer
        except ImportError as exc:  # pragma: no cover - env without extra
            raise CapabilityError(
                "loading tokenizer files requires the 'tokenizers' package"
            ) from exc
        self._tok = Tokenizer.from_file(path)
        self.family_id = family_id or path
        self.vocab_size = self._tok.get_vocab_size()

    def _encode(self, text: str) -> TokenizationWithOffsets:
        enc = self._tok.encode(text)
        # prefix sum of UTF-8 byte lengths: char index -> byte index
        byte_at = [0]
        for ch in text:
            byte_at.append(byte_at[-1] + len(ch.encode("utf-8")))
        token_ids: list[int] = []
        offsets: list[tuple[int, int]] = []
        prev_end = 0
        for token_id, (start, end), special in zip(
            enc.ids, enc.offsets, enc.special_tokens_mask
        ):
            if special or end <= start:
                offsets.append((prev_end, prev_end))
            else:
                byte_start, byte_end = byte_at[start], byte_at[end]
                offsets.append((byte_start, byte_end))
                prev_end = byte_end
            token_ids.append(token_id)
        return TokenizationWithOffsets(tuple(token_ids), tuple(offsets), byte_at[-1])

    def decode(self, token_ids: list[int]) -> str:
        return self._tok.decode(token_ids)


def load_tokenizer(spec: str) -> TokenizerHandle:
    """Resolve a CLI/config tokenizer spec.

    ``whitespace`` and ``bytes`` (or ``bytes:WIDTH``) name the built-in
    doubles; anything else is treated as a tokenizer-definition file path.
    """
    if spec == "whitespace":
        return WhitespaceTokenizer()
    if spec == "bytes":
        return ByteTokenizer()
    if spec.startswith("bytes:"):
        return ByteTokenizer(width=int(spec.split(":", 1)[1]))
    return FileTokenizer(spec)
