"""Mapping selected draft-token spans back to text and assembling the output.

Token spans become byte ranges of the original UTF-8 text via the draft
tokenizer's offsets; ranges are coalesced, snapped outward to character
boundaries, and joined with a delimiter at every discontinuity.
"""

from __future__ import annotations

from dataclasses import dataclass

from .chunks import SelectedSpans
from .errors import InvalidInputError


@dataclass(frozen=True)
class TokenizationWithOffsets:
    """Token IDs plus (byte_start, byte_end) offsets into the original text.

    Special tokens (BOS and friends) carry empty offsets (start == end) and
    contribute no bytes.  Offsets are byte positions, not character indices.
    """

    token_ids: tuple[int, ...]
    offsets: tuple[tuple[int, int], ...]
    text_len: int

    def __post_init__(self):
        if len(self.token_ids) != len(self.offsets):
            raise InvalidInputError(
                f"{len(self.token_ids)} token ids but {len(self.offsets)} offsets"
            )
        prev_start = 0
        for start, end in self.offsets:
            if not (0 <= start <= end <= self.text_len):
                raise InvalidInputError(
                    f"offset ({start}, {end}) outside [0, {self.text_len}]"
                )
            if start < prev_start:
                raise InvalidInputError("byte_start must be non-decreasing")
            prev_start = start

    def __len__(self) -> int:
        return len(self.token_ids)

    @property
    def leading_special_count(self) -> int:
        """Length of the pinned prefix of empty-offset (BOS-like) tokens."""
        count = 0
        for start, end in self.offsets:
            if start != end:
                break
            count += 1
        return count


@dataclass(frozen=True)
class AssembledText:
    text: str
    segment_count: int
    delimiter_count: int


def _is_char_boundary(text: bytes, pos: int) -> bool:
    if pos <= 0 or pos >= len(text):
        return True
    return (text[pos] & 0xC0) != 0x80


def _snap_outward(text: bytes, start: int, end: int) -> tuple[int, int]:
    while not _is_char_boundary(text, start):
        start -= 1
    while not _is_char_boundary(text, end):
        end += 1
    return start, end


def map_spans_to_byte_ranges(
    tok: TokenizationWithOffsets, spans: SelectedSpans, text: bytes
) -> list[tuple[int, int]]:
    """Turn token spans into sorted, disjoint, character-aligned byte ranges.

    A token span [a, b) covers bytes [offsets[a].start, offsets[b-1].end).
    Each range is snapped outward to the nearest UTF-8 character boundary;
    ranges that then touch or overlap are coalesced, which keeps the
    extracted text a byte-level subsequence of the original.
    """
    raw: list[tuple[int, int]] = []
    for a, b in spans.spans:
        if a < 0 or b > len(tok):
            raise InvalidInputError(f"token span ({a}, {b}) outside [0, {len(tok)})")
        start = tok.offsets[a][0]
        end = tok.offsets[b - 1][1]
        if end > start:
            raw.append((start, end))

    snapped = sorted(_snap_outward(text, s, e) for s, e in raw)
    merged: list[list[int]] = []
    for start, end in snapped:
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return [(s, e) for s, e in merged]


def assemble(text: bytes, ranges: list[tuple[int, int]], delimiter: str) -> AssembledText:
    """Concatenate kept byte ranges, inserting the delimiter at each gap.

    Byte-adjacent ranges fuse into one segment (no discontinuity to mark);
    no leading or trailing delimiter is ever emitted.
    """
    if not delimiter:
        raise InvalidInputError("delimiter must be non-empty")
    prev_end = None
    segments: list[bytes] = []
    for start, end in ranges:
        if not (0 <= start < end <= len(text)):
            raise InvalidInputError(f"byte range ({start}, {end}) outside [0, {len(text)}]")
        if prev_end is not None and start < prev_end:
            raise InvalidInputError("byte ranges must be sorted and disjoint")
        if not _is_char_boundary(text, start) or not _is_char_boundary(text, end):
            raise InvalidInputError(f"byte range ({start}, {end}) splits a UTF-8 character")
        piece = text[start:end]
        if prev_end is not None and start == prev_end:
            segments[-1] += piece
        else:
            segments.append(piece)
        prev_end = end

    joined = delimiter.encode("utf-8").join(segments)
    return AssembledText(
        text=joined.decode("utf-8"),
        segment_count=len(segments),
        delimiter_count=max(0, len(segments) - 1),
    )
