"""Command line entry point: ``embed --input DIR --output FILE``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from imgembed.core import DEFAULT_BATCH, DEFAULT_DIM, EmbedError, EmbedJob, embed_images


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"embed: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="embed", description="Embed a directory of images into a CSV.")
    parser.add_argument("--input", required=True, type=Path, help="directory of image files")
    parser.add_argument("--output", required=True, type=Path, help="CSV file to write")
    parser.add_argument(
        "--dim",
        type=int,
        default=DEFAULT_DIM,
        help=f"expected embedding width (default {DEFAULT_DIM})",
    )
    parser.add_argument(
        "--batch",
        type=int,
        default=DEFAULT_BATCH,
        help=f"inference batch size (default {DEFAULT_BATCH})",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(format="%(levelname)s %(message)s", level=logging.INFO)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        job = EmbedJob(
            input_dir=args.input,
            output_path=args.output,
            dim=args.dim,
            batch_size=args.batch,
        )
        result = embed_images(job)
    except EmbedError as exc:
        print(f"embed: error: {exc}", file=sys.stderr)
        return 1

    print(
        f"embedded {len(result.embedded)} image(s) at {job.dim} features "
        f"({result.source} backbone), skipped {len(result.skipped)}"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
