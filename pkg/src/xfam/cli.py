"""Command-line front end: compress prompts, sweep keep rates, serve HTTP.

Exit codes: 0 success, 1 typed pipeline error (class name on stderr),
2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .bench import (
    aggregate,
    needle_provider_factory,
    read_jsonl,
    report_csv,
    run_corpus,
    sweep,
)
from .config import load_profiles, load_service_settings, resolve_config_path
from .errors import XfamError
from .pipeline import DEFAULT_BLOCK_ALIGN, CompressionConfig, KeepRateSpec, compress
from .providers import FileProvider, HTTPProvider, SyntheticProvider
from .tokenizers import load_tokenizer


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="profile config file (YAML); XFAM_CONFIG overrides")
    parser.add_argument("--profile", default="default", help="profile name (default/code/...)")
    parser.add_argument("--keep-rate", type=float, help="keep fraction in (0, 1]")
    parser.add_argument("--target-length", type=int, help="desired compressed target length")
    parser.add_argument(
        "--block-align",
        type=int,
        default=DEFAULT_BLOCK_ALIGN,
        help="round target length to this block size (0 disables)",
    )
    parser.add_argument("--chunk-size", type=int, help="draft tokens per selection chunk")
    parser.add_argument("--kernel", type=int, help="average-pooling kernel (odd)")
    parser.add_argument("--lookahead", type=int, help="draft lookahead steps")
    parser.add_argument("--delimiter", help="marker inserted at discontinuities")
    parser.add_argument(
        "--provider",
        default="synthetic",
        help="attention source: synthetic | file:PATH | http:URL",
    )
    parser.add_argument("--seed", type=int, default=0, help="seed for the synthetic provider")
    parser.add_argument(
        "--draft-tokenizer", default="whitespace",
        help="whitespace | bytes[:WIDTH] | tokenizer.json path",
    )
    parser.add_argument(
        "--target-tokenizer", default="whitespace",
        help="whitespace | bytes[:WIDTH] | tokenizer.json path",
    )
    parser.add_argument("--out", choices=["json", "csv", "text"], default="json")
    parser.add_argument("--output", help="write the report/result here instead of stdout")


def _build_config(args, parser: argparse.ArgumentParser) -> CompressionConfig:
    profiles = load_profiles(resolve_config_path(args.config))
    base = profiles.get(args.profile)
    if base is None:
        parser.error(f"unknown profile {args.profile!r}")

    if args.keep_rate is not None and args.target_length is not None:
        parser.error("--keep-rate and --target-length are mutually exclusive")
    if args.target_length is not None:
        align = None if args.block_align == 0 else args.block_align
        keep = KeepRateSpec.target_length(args.target_length, block_align=align)
    else:
        keep = KeepRateSpec.fraction(args.keep_rate if args.keep_rate is not None else 1.0)

    overrides = {"keep": keep}
    if args.chunk_size is not None:
        overrides["chunk_size"] = args.chunk_size
    if args.kernel is not None:
        overrides["pooling_kernel"] = args.kernel
    if args.lookahead is not None:
        overrides["n_lookahead"] = args.lookahead
    if args.delimiter is not None:
        overrides["delimiter"] = args.delimiter
    return dataclasses.replace(base, **overrides)


def _build_provider(spec: str, seed: int):
    if spec == "synthetic":
        return SyntheticProvider(seed=seed)
    if spec.startswith("file:"):
        return FileProvider(spec[5:])
    if spec.startswith("http:") or spec.startswith("https:"):
        return HTTPProvider(spec)
    raise XfamError(f"unknown provider spec {spec!r}")


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_compress(args, parser) -> int:
    config = _build_config(args, parser)
    draft_tok = load_tokenizer(args.draft_tokenizer)
    target_tok = load_tokenizer(args.target_tokenizer)

    if args.corpus:
        samples, skipped = read_jsonl(args.corpus)
        provider = needle_provider_factory(draft_tok, base_seed=args.seed)
        records = run_corpus(samples, config, provider, draft_tok, target_tok)
        report = {
            "records": [r.as_row() for r in records],
            "aggregate": aggregate(records),
            "skipped_lines": skipped,
        }
        if args.out == "csv":
            _emit(report_csv({"records": report["records"], "aggregates": [report["aggregate"]]}),
                  args.output)
        else:
            _emit(json.dumps(report, indent=2), args.output)
        return 0

    if args.input == "-":
        text = sys.stdin.read()
    else:
        text = Path(args.input).read_text(encoding="utf-8")
    provider = _build_provider(args.provider, args.seed)
    result = compress(text, config, provider, draft_tok, target_tok)
    if args.out == "text":
        _emit(result.text, args.output)
    else:
        _emit(
            json.dumps(
                {
                    "text": result.text,
                    "token_count": result.stats.target_tokens_compressed,
                    "keep_rate": result.achieved_keep_rate,
                    "spans": [list(s) for s in result.draft_spans.spans],
                },
                indent=2,
            ),
            args.output,
        )
    return 0


def cmd_sweep(args, parser) -> int:
    config = _build_config(args, parser)
    draft_tok = load_tokenizer(args.draft_tokenizer)
    target_tok = load_tokenizer(args.target_tokenizer)
    try:
        rates = [float(r) for r in args.keep_rates.split(",") if r.strip()]
    except ValueError:
        parser.error(f"bad --keep-rates list {args.keep_rates!r}")
    samples, skipped = read_jsonl(args.corpus)
    provider = needle_provider_factory(draft_tok, base_seed=args.seed)
    report = sweep(samples, rates, config, provider, draft_tok, target_tok)
    report["skipped_lines"] = skipped
    if args.out == "csv":
        _emit(report_csv(report), args.output)
    else:
        _emit(json.dumps(report, indent=2), args.output)
    return 0


def cmd_serve(args, parser) -> int:
    from .service import ServiceSettings, serve

    config_path = resolve_config_path(args.config)
    raw = load_service_settings(config_path)
    settings = ServiceSettings(
        profiles=load_profiles(config_path),
        provider=_build_provider(args.provider, args.seed),
        draft_tok=load_tokenizer(args.draft_tokenizer),
        target_tok=load_tokenizer(args.target_tokenizer),
        max_input_bytes=args.max_input_bytes or raw.get("max_input_bytes", 8 * 1024 * 1024),
        upstream_url=args.upstream or raw.get("upstream_url"),
    )
    serve(args.bind, settings)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="xfam", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_compress = sub.add_parser("compress", help="compress one prompt or a JSONL corpus")
    p_compress.add_argument("input", nargs="?", default="-", help="text file or - for stdin")
    p_compress.add_argument("--corpus", help="JSONL corpus instead of a single prompt")
    _add_common_flags(p_compress)

    p_sweep = sub.add_parser("sweep", help="run a corpus across several keep rates")
    p_sweep.add_argument("corpus", help="JSONL corpus with a 'prompt' field")
    p_sweep.add_argument("--keep-rates", required=True, help="comma list, e.g. 0.3,0.2,0.15")
    _add_common_flags(p_sweep)

    p_serve = sub.add_parser("serve", help="run the HTTP compression service")
    p_serve.add_argument("--bind", default="127.0.0.1:8080")
    p_serve.add_argument("--max-input-bytes", type=int)
    p_serve.add_argument("--upstream", help="completion endpoint for passthrough mode")
    _add_common_flags(p_serve)

    args = parser.parse_args(argv)
    handlers = {"compress": cmd_compress, "sweep": cmd_sweep, "serve": cmd_serve}
    try:
        return handlers[args.command](args, parser)
    except XfamError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
