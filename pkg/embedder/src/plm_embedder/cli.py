"""Command-line front end mirroring the EmbedJob fields."""

from __future__ import annotations

import argparse
import sys

from .export import EmbedJob, ExportError, export_embeddings


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(
        prog="plm-embed",
        description="Export frozen language-model pair embeddings to a table file",
    )
    parser.add_argument("--data", required=True, help="dataset file (jsonl or csv)")
    parser.add_argument("--model", required=True, help="model identifier or local directory")
    parser.add_argument("--out", required=True, help="output embedding-table path")
    parser.add_argument("--max-length", type=int, default=256)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)

    try:
        stats = export_embeddings(
            EmbedJob(
                dataset_path=args.data,
                model_id=args.model,
                output_path=args.out,
                max_length=args.max_length,
                batch_size=args.batch_size,
                device=args.device,
            )
        )
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)
    print(
        f"wrote {stats['rows']} embeddings at dim {stats['dim']} "
        f"(longest sequence {stats['max_tokens']}) -> {args.out}"
    )


if __name__ == "__main__":
    main()
