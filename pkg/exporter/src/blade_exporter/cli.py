"""Command-line wrapper: corpus in, embedding file out."""

from __future__ import annotations

import argparse
import logging
import sys

from .export import DEFAULT_LAYERS, DEFAULT_MAX_WORDPIECES, ExportError, export


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="blade-export",
        description="Export frozen encoder hidden states for a corpus.",
    )
    parser.add_argument("--input", required=True, help="corpus file (JSON lines)")
    parser.add_argument("--model", required=True,
                        help="local pretrained encoder directory")
    parser.add_argument("--layers", type=int, default=DEFAULT_LAYERS,
                        help="number of top hidden layers to concatenate")
    parser.add_argument("--max-wordpieces", type=int,
                        default=DEFAULT_MAX_WORDPIECES)
    parser.add_argument("--out", required=True, help="output embedding file")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        dim = export(
            args.input, args.model, args.out,
            layers=args.layers, max_wordpieces=args.max_wordpieces,
        )
    except ExportError as exc:
        print(f"export error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out} (dim {dim})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
