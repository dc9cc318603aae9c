"""CLI: score a dataset with a masked LM and write the interchange files.

    mlm-export --model bert-base-uncased --data pool.jsonl \
        --mode unmasked --out-nll nll.jsonl --out-emb emb.jsonl

(The entry point is also installed as `export`; note that bash resolves a
bare `export` to its builtin, so call it as `mlm-export` or via its path.)
"""

from __future__ import annotations

import argparse
import sys

from .export import ExportJob, run_export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlm-export",
        description="Export masked-LM token surprisal and sentence embeddings.",
    )
    parser.add_argument("--model", required=True, help="model name or local path")
    parser.add_argument("--data", required=True, help="dataset file (core JSONL or TSV format)")
    parser.add_argument("--format", default="jsonl", choices=["jsonl", "tsv"])
    parser.add_argument("--mode", default="unmasked", choices=["unmasked", "masked"])
    parser.add_argument("--max-len", dest="max_len", type=int, default=128,
                        help="word positions per sentence; must match the core config")
    parser.add_argument("--out-nll", dest="out_nll", help="NLL interchange file to write")
    parser.add_argument("--out-emb", dest="out_emb", help="sentence-embedding file to write")
    parser.add_argument("--batch-size", dest="batch_size", type=int, default=16)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if not args.out_nll and not args.out_emb:
        print("error: provide --out-nll and/or --out-emb", file=sys.stderr)
        return 1
    job = ExportJob(
        model=args.model,
        data_path=args.data,
        data_format=args.format,
        mode=args.mode,
        max_len=args.max_len,
        out_nll=args.out_nll,
        out_emb=args.out_emb,
        batch_size=args.batch_size,
    )
    try:
        run_export(job)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    wrote = [p for p in (args.out_nll, args.out_emb) if p]
    print("wrote " + " and ".join(wrote))
    return 0


if __name__ == "__main__":
    sys.exit(main())
