"""Command-line entry point for the stand-in adapters."""

from __future__ import annotations

import argparse
import sys

from .emit import emit_corpus, emit_distances, emit_features


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="uvclone-adapt",
        description="emit corpus, feature-map and distance files for the pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("corpus", help="annotate an image directory into JSONL")
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("features", help="emit one FMAP file per garment")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("distances", help="emit the pairwise DMAT matrix")
    p.add_argument("--corpus", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)
    if args.command == "corpus":
        emit_corpus(args.images, args.out, args.seed)
    elif args.command == "features":
        emit_features(args.corpus, args.out, args.seed)
    elif args.command == "distances":
        emit_distances(args.corpus, args.features, args.out, args.seed)
    return 0


if __name__ == "__main__":
    sys.exit(main())
