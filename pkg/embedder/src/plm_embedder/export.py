"""Batched frozen-model inference over comment-reply pairs."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer


class ExportError(ValueError):
    """Bad job configuration, malformed dataset, or id collision."""


@dataclass
class EmbedJob:
    dataset_path: str
    model_id: str
    output_path: str
    max_length: int = 256
    batch_size: int = 16
    device: str = "cpu"

    def __post_init__(self):
        if self.max_length < 8:
            raise ExportError(f"max_length must be at least 8, got {self.max_length}")
        if self.batch_size < 1:
            raise ExportError(f"batch_size must be positive, got {self.batch_size}")


def read_pairs(path: str | Path) -> list[tuple[str, str, str]]:
    """(id, comment, reply) triples from a canonical JSONL or CSV dataset.

    Rows without an explicit id get their 0-based row index, matching the
    dataset convention of the classifier package.
    """
    path = Path(path)
    rows: list[dict] = []
    if path.suffix == ".csv":
        with path.open("r", encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    else:
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rows.append(json.loads(line))

    out: list[tuple[str, str, str]] = []
    seen: set[str] = set()
    for i, raw in enumerate(rows):
        for key in ("comment", "reply"):
            if key not in raw or raw[key] is None:
                raise ExportError(f"row {i + 1}: missing field {key!r}")
        example_id = str(raw["id"]) if raw.get("id") not in (None, "") else str(i)
        if example_id in seen:
            raise ExportError(f"row {i + 1}: id collision on {example_id!r}")
        seen.add(example_id)
        out.append((example_id, str(raw["comment"]), str(raw["reply"])))
    return out


def _format_f32(x: float) -> str:
    # float64 repr of the float32 value: parses back bit-exactly
    return repr(float(np.float32(x)))


def export_embeddings(job: EmbedJob) -> dict:
    """Run the frozen model over every pair and write the table file.

    Returns stats: row count, table dim (= model hidden size), and the
    longest encoded sequence actually seen (post-truncation).
    """
    pairs = read_pairs(job.dataset_path)

    tokenizer = AutoTokenizer.from_pretrained(job.model_id)
    model = AutoModel.from_pretrained(job.model_id)
    model.to(job.device)
    model.eval()
    dim = int(model.config.hidden_size)

    max_tokens = 0
    out_path = Path(job.output_path)
    with out_path.open("w", encoding="utf-8") as fh, torch.inference_mode():
        fh.write(f"dim={dim} count={len(pairs)}\n")
        for lo in range(0, len(pairs), job.batch_size):
            batch = pairs[lo : lo + job.batch_size]
            enc = tokenizer(
                [c for _, c, _ in batch],
                [r for _, _, r in batch],
                truncation=True,
                max_length=job.max_length,
                padding=True,
                return_tensors="pt",
            ).to(job.device)
            lengths = enc["attention_mask"].sum(dim=1)
            max_tokens = max(max_tokens, int(lengths.max()))
            hidden = model(**enc).last_hidden_state[:, 0, :]
            vectors = hidden.to(torch.float32).cpu().numpy()
            for (example_id, _, _), vec in zip(batch, vectors):
                if "\t" in example_id or "\n" in example_id:
                    raise ExportError(f"id {example_id!r} contains tab or newline")
                fh.write(example_id + "\t" + ",".join(_format_f32(v) for v in vec) + "\n")

    return {"rows": len(pairs), "dim": dim, "max_tokens": max_tokens}
