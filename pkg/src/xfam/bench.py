"""Corpus benchmarking: per-sample compression records and keep-rate sweeps.

Corpora are JSONL files with a ``prompt`` field per line and optional
``needle`` / ``question`` strings whose survival in the compressed text is
worth tracking.  Aggregates are plain arithmetic over the records so an
independent reader can recompute them.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .assembly import TokenizationWithOffsets
from .pipeline import CompressionConfig, KeepRateSpec, compress
from .providers import AttentionProvider, SyntheticProvider
from .tokenizers import TokenizerHandle


@dataclass(frozen=True)
class Sample:
    sample_id: str
    prompt: str
    needle: str | None = None
    question: str | None = None


@dataclass(frozen=True)
class BenchmarkRecord:
    sample_id: str
    rho_requested: float
    rho_achieved: float
    target_len: int
    draft_len: int
    compressed_len: int
    stage_ms: dict[str, float]
    needle_retained: bool | None = None
    question_retained: bool | None = None

    def as_row(self) -> dict:
        row = dataclasses.asdict(self)
        row["stage_ms"] = {k: round(v, 3) for k, v in self.stage_ms.items()}
        return row


def read_jsonl(path: str | Path) -> tuple[list[Sample], int]:
    """Parse a corpus; malformed lines are skipped and counted."""
    samples: list[Sample] = []
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                prompt = doc["prompt"]
                if not isinstance(prompt, str):
                    raise TypeError("prompt must be a string")
            except (json.JSONDecodeError, KeyError, TypeError):
                skipped += 1
                continue
            samples.append(
                Sample(
                    sample_id=str(doc.get("id", lineno)),
                    prompt=prompt,
                    needle=doc.get("needle"),
                    question=doc.get("question"),
                )
            )
    return samples, skipped


def find_token_span(enc: TokenizationWithOffsets, byte_start: int, byte_end: int) -> tuple[int, int]:
    """Half-open range of draft tokens overlapping the byte interval."""
    first = None
    last = None
    for idx, (start, end) in enumerate(enc.offsets):
        if end > byte_start and start < byte_end:
            if first is None:
                first = idx
            last = idx
    if first is None:
        return (0, 0)
    return (first, last + 1)


def needle_provider_factory(
    draft_tok: TokenizerHandle, base_seed: int = 0
) -> Callable[[int, Sample], AttentionProvider]:
    """Synthetic providers that light up each sample's needle positions."""

    def build(index: int, sample: Sample) -> AttentionProvider:
        spans: tuple[tuple[int, int], ...] = ()
        if sample.needle:
            byte_start = sample.prompt.encode("utf-8").find(sample.needle.encode("utf-8"))
            if byte_start >= 0:
                enc = draft_tok.encode_with_offsets(sample.prompt)
                spans = (
                    find_token_span(
                        enc, byte_start, byte_start + len(sample.needle.encode("utf-8"))
                    ),
                )
        return SyntheticProvider(seed=base_seed + index, needle_token_spans=spans)

    return build


def run_corpus(
    samples: list[Sample],
    config: CompressionConfig,
    provider: AttentionProvider | Callable[[int, Sample], AttentionProvider],
    draft_tok: TokenizerHandle,
    target_tok: TokenizerHandle,
) -> list[BenchmarkRecord]:
    """Compress every sample under one config; provider may be per-sample."""
    records = []
    for index, sample in enumerate(samples):
        prov = provider(index, sample) if callable(provider) else provider
        result = compress(sample.prompt, config, prov, draft_tok, target_tok)
        records.append(
            BenchmarkRecord(
                sample_id=sample.sample_id,
                rho_requested=result.stats.rho_requested,
                rho_achieved=result.achieved_keep_rate,
                target_len=result.stats.target_tokens_original,
                draft_len=result.stats.draft_tokens,
                compressed_len=result.stats.target_tokens_compressed,
                stage_ms=result.stats.stage_ms,
                needle_retained=(sample.needle in result.text) if sample.needle else None,
                question_retained=(sample.question in result.text) if sample.question else None,
            )
        )
    return records


def aggregate(records: list[BenchmarkRecord]) -> dict:
    """Exact means over a record list (one sweep cell)."""
    n = len(records)
    if n == 0:
        return {"n_samples": 0}
    with_needle = [r for r in records if r.needle_retained is not None]
    out = {
        "n_samples": n,
        "mean_rho_requested": sum(r.rho_requested for r in records) / n,
        "mean_rho_achieved": sum(r.rho_achieved for r in records) / n,
        "mean_target_len": sum(r.target_len for r in records) / n,
        "mean_compressed_len": sum(r.compressed_len for r in records) / n,
    }
    if with_needle:
        out["needle_retention"] = sum(r.needle_retained for r in with_needle) / len(with_needle)
    return out


def sweep(
    samples: list[Sample],
    keep_rates: list[float],
    config: CompressionConfig,
    provider: AttentionProvider | Callable[[int, Sample], AttentionProvider],
    draft_tok: TokenizerHandle,
    target_tok: TokenizerHandle,
) -> dict:
    """One row per (sample, keep rate) plus an aggregate row per rate."""
    rows: list[dict] = []
    aggregates: list[dict] = []
    for rate in keep_rates:
        cfg = dataclasses.replace(config, keep=KeepRateSpec.fraction(rate))
        records = run_corpus(samples, cfg, provider, draft_tok, target_tok)
        rows.extend(dict(r.as_row(), keep_rate=rate) for r in records)
        aggregates.append(dict(aggregate(records), keep_rate=rate))
    return {"records": rows, "aggregates": aggregates}


_CSV_FIELDS = [
    "keep_rate",
    "sample_id",
    "rho_requested",
    "rho_achieved",
    "target_len",
    "draft_len",
    "compressed_len",
    "needle_retained",
    "question_retained",
]


def report_csv(report: dict) -> str:
    """Flatten a sweep report to CSV: record rows, then aggregate rows."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(_CSV_FIELDS)
    for row in report.get("records", []):
        writer.writerow([row.get(f, "") for f in _CSV_FIELDS])
    writer.writerow([])
    agg_fields = ["keep_rate", "n_samples", "mean_rho_requested", "mean_rho_achieved",
                  "mean_target_len", "mean_compressed_len", "needle_retention"]
    writer.writerow(agg_fields)
    for row in report.get("aggregates", []):
        writer.writerow([row.get(f, "") for f in agg_fields])
    return buf.getvalue()
