"""Text feature vectors: a deterministic hashing featurizer plus a loader
for externally produced embedding tables.

The table file format is UTF-8 text: line 1 is ``dim=<d> count=<n>``,
followed by n lines ``id<TAB>f1,f2,...,fd``.  Values round-trip 32-bit
floats bit-exactly, so any producer (including the external language-model
embedder) can hand features to this package without a binary dependency.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import InteractionRecord

_TOKEN_RE = re.compile(r"\w+")
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


class TableError(ValueError):
    """Malformed embedding-table file."""


@dataclass
class EmbeddingTable:
    """example-id -> fixed-width feature vector (float32 payload)."""

    dim: int
    rows: dict[str, np.ndarray]

    def vector(self, example_id: str) -> np.ndarray:
        return self.rows[example_id]

    def __contains__(self, example_id: str) -> bool:
        return example_id in self.rows

    def __len__(self) -> int:
        return len(self.rows)


def _fnv1a(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def hash_featurize(comment: str, reply: str, dim: int) -> np.ndarray:
    """Signed hashing bag-of-tokens over the pair, L2-normalized.

    Tokens are lowercase word characters; comment and reply tokens are salted
    differently so the two texts occupy independent hash streams.  The result
    is a unit vector, or the zero vector when both texts are empty of tokens.
    """
    if dim < 8:
        raise ValueError(f"feature dimension must be at least 8, got {dim}")
    v = np.zeros(dim, dtype=np.float64)
    for salt, text in ((b"c|", comment), (b"r|", reply)):
        for token in _TOKEN_RE.findall(text.lower()):
            h = _fnv1a(salt + token.encode("utf-8"))
            sign = 1.0 if (h >> 63) == 0 else -1.0
            v[h % dim] += sign
    norm = np.linalg.norm(v)
    if norm > 0:
        v /= norm
    return v


def token_length(record: InteractionRecord) -> int:
    """Whitespace token count of comment plus reply (length-bucket metadata)."""
    return len(record.comment_text.split()) + len(record.reply_text.split())


def load_embedding_table(path: str | Path) -> EmbeddingTable:
    """Parse a table file; any malformed row raises naming its line."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise TableError("empty table file")
    header = re.fullmatch(r"dim=(\d+) count=(\d+)", lines[0].strip())
    if not header:
        raise TableError(f"bad header {lines[0]!r}")
    dim, count = int(header.group(1)), int(header.group(2))
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != count:
        raise TableError(f"header promises {count} rows, file has {len(body)}")
    rows: dict[str, np.ndarray] = {}
    for i, line in enumerate(body):
        rownum = i + 1
        parts = line.split("\t")
        if len(parts) != 2:
            raise TableError(f"row {rownum}: expected id<TAB>values")
        example_id, payload = parts
        if example_id in rows:
            raise TableError(f"row {rownum}: duplicate id {example_id!r}")
        try:
            vec = np.array([np.float32(float(x)) for x in payload.split(",")], dtype=np.float32)
        except ValueError:
            raise TableError(f"row {rownum}: non-numeric value") from None
        if vec.shape[0] != dim:
            raise TableError(f"row {rownum}: {vec.shape[0]} values, header dim is {dim}")
        if not np.all(np.isfinite(vec)):
            raise TableError(f"row {rownum}: non-finite value")
        rows[example_id] = vec
    return EmbeddingTable(dim=dim, rows=rows)


def save_embedding_table(table: EmbeddingTable, path: str | Path) -> None:
    """Write a table file whose floats reload to bit-identical float32."""
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"dim={table.dim} count={len(table.rows)}\n")
        for example_id, vec in table.rows.items():
            if "\t" in example_id or "\n" in example_id:
                raise TableError(f"id {example_id!r} contains tab or newline")
            values = ",".join(repr(float(np.float32(x))) for x in vec)
            fh.write(f"{example_id}\t{values}\n")


def featurize_records(
    records, dim: int = 256
) -> EmbeddingTable:
    """Hash-featurize a record collection into a table keyed by record id."""
    rows = {
        r.id: hash_featurize(r.comment_text, r.reply_text, dim).astype(np.float32)
        for r in records
    }
    return EmbeddingTable(dim=dim, rows=rows)
