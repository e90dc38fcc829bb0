"""Command-line entry points for the encoder exporter."""

from __future__ import annotations

import argparse
import logging
import sys

from .cls_export import export_cls
from .corpus_io import read_corpus, read_sentence_manifest
from .nsp_export import export_nsp


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="essay-exporter",
        description="export transformer CLS embeddings and NSP probabilities",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cls_p = sub.add_parser("export-cls")
    cls_p.add_argument("--corpus", required=True)
    cls_p.add_argument("--format", choices=["asap", "simple"], default="asap")
    cls_p.add_argument("--model", required=True, help="local checkpoint directory")
    cls_p.add_argument("--out", required=True)
    cls_p.add_argument("--max-length", type=int)
    cls_p.add_argument("--batch-size", type=int, default=8)

    nsp_p = sub.add_parser("export-nsp")
    nsp_p.add_argument("--manifest", required=True,
                       help="sentence manifest written by the scoring pipeline")
    nsp_p.add_argument("--model", required=True)
    nsp_p.add_argument("--out", required=True)
    nsp_p.add_argument("--max-length", type=int)
    nsp_p.add_argument("--batch-size", type=int, default=16)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "export-cls":
            essays = read_corpus(args.corpus, format=args.format)
            result = export_cls(essays, args.model, args.out,
                                max_length=args.max_length, batch_size=args.batch_size)
            print(f"wrote {args.out}: {result.n_records} records, dim={result.dim}, "
                  f"{len(result.truncated_ids)} truncated, {len(result.skipped_ids)} skipped")
        else:
            sentences = read_sentence_manifest(args.manifest)
            result = export_nsp(sentences, args.model, args.out,
                                max_length=args.max_length, batch_size=args.batch_size)
            print(f"wrote {args.out}: {result.n_essays} essays, {result.n_pairs} pairs, "
                  f"{len(result.aborted_ids)} aborted")
        return 0
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
