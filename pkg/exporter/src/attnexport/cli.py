"""Exporter CLI: write .attn dumps or serve the /v1/attention endpoint."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ExportError
from .export import DEFAULT_LOOKAHEAD, ExportJob, run_export
from .models import encode_prompt


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="attn-export", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_export = sub.add_parser("export", help="run lookahead steps and write a dump")
    p_export.add_argument("--model", required=True, help="local checkpoint dir or toy[:SEED]")
    p_export.add_argument("--prompt-file", required=True, help="UTF-8 prompt text file")
    p_export.add_argument("--lookahead", type=int, default=DEFAULT_LOOKAHEAD)
    p_export.add_argument(
        "--reduce", action="store_true", help="store the per-step layer/head max only"
    )
    p_export.add_argument("--out", required=True, help="output .attn path")

    p_serve = sub.add_parser("serve", help="serve POST /v1/attention")
    p_serve.add_argument("--model", required=True)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8070)

    args = parser.parse_args(argv)
    try:
        if args.command == "export":
            text = Path(args.prompt_file).read_text(encoding="utf-8")
            job = ExportJob(
                model_id=args.model,
                token_ids=tuple(encode_prompt(args.model, text)),
                n_lookahead=args.lookahead,
                reduction="per-step-reduced" if args.reduce else "full",
                out_path=args.out,
            )
            tensor = run_export(job)
            print(
                f"wrote {args.out}: steps={tensor.shape[0]} layers={tensor.shape[1]} "
                f"heads={tensor.shape[2]} prompt_tokens={tensor.shape[3]}"
            )
            return 0
        if args.command == "serve":
            from .service import serve

            serve(args.model, host=args.host, port=args.port)
            return 0
    except ExportError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
