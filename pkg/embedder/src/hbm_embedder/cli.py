"""embed: corpus.jsonl -> HBE1 dataset + sentence sidecar."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .builder import build_dataset, read_corpus
from .encoders import load_encoder


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed",
        description="Convert a labeled JSONL corpus into an HBE1 "
                    "sentence-embedding dataset using a frozen encoder",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--in", dest="corpus", required=True, help="corpus .jsonl path")
    parser.add_argument("--out", required=True, help="output .hbe path")
    parser.add_argument("--encoder", default="stub", help="'stub' or 'hf:<model name>'")
    parser.add_argument("--dim", type=int, default=16,
                        help="embedding width for the stub encoder")
    parser.add_argument("--token-limit", type=int, default=512,
                        help="per-sentence token cap for the stub encoder")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        encoder = load_encoder(args.encoder, dim=args.dim, token_limit=args.token_limit)
        corpus = read_corpus(args.corpus)
        written = build_dataset(corpus, args.out, encoder)
    except (OSError, ValueError, ImportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"embedded {written}/{len(corpus)} documents (dim {encoder.dim}) -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
