"""Dataset parsing and temporally ordered train/dev/test splitting.

A dataset row is one labeled comment-reply pair.  The canonical on-disk form
is JSON-lines with keys ``{id, comment, reply, comment_author, reply_author,
label, timestamp, topic}``; CSV with the same header names is accepted too.
Labels are serialized exactly as ``agree`` / ``disagree`` / ``neutral``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

LABELS = ("agree", "disagree", "neutral")
LABEL_SIGN = {"agree": 1, "disagree": -1, "neutral": 0}
LABEL_INDEX = {label: i for i, label in enumerate(LABELS)}

_FIELDS = ("comment", "reply", "comment_author", "reply_author", "label", "timestamp", "topic")


class DatasetError(ValueError):
    """Malformed dataset file or invalid split request."""


@dataclass(frozen=True)
class InteractionRecord:
    """One labeled comment-reply pair.

    ``comment_author`` and ``reply_author`` may coincide (self-reply); such
    records stay in the dataset as classification examples but contribute no
    edge to the relation graph.
    """

    id: str
    comment_text: str
    reply_text: str
    comment_author: str
    reply_author: str
    label: str
    timestamp: int
    topic: str

    def validate(self, row: int | None = None) -> None:
        where = f" (row {row})" if row is not None else ""
        if self.label not in LABELS:
            raise DatasetError(f"unknown label {self.label!r}{where}")
        if not self.comment_author or not self.reply_author:
            raise DatasetError(f"empty author id{where}")
        if self.timestamp < 0:
            raise DatasetError(f"negative timestamp {self.timestamp}{where}")


@dataclass
class DatasetSplit:
    """Temporally ordered partition: train precedes dev precedes test."""

    train: list[InteractionRecord]
    dev: list[InteractionRecord]
    test: list[InteractionRecord]

    def __iter__(self):
        return iter((self.train, self.dev, self.test))


def _coerce_timestamp(value, row: int) -> int:
    if isinstance(value, bool):
        raise DatasetError(f"non-numeric timestamp {value!r} (row {row})")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not value.is_integer():
            raise DatasetError(f"timestamp {value!r} is not integral (row {row})")
        return int(value)
    try:
        return int(str(value).strip())
    except (TypeError, ValueError):
        raise DatasetError(f"non-numeric timestamp {value!r} (row {row})") from None


def _record_from_mapping(row_idx: int, raw: dict) -> InteractionRecord:
    row = row_idx + 1
    missing = [k for k in _FIELDS if k not in raw or raw[k] is None]
    if missing:
        raise DatasetError(f"missing field(s) {missing} (row {row})")
    rec = InteractionRecord(
        id=str(raw["id"]) if raw.get("id") not in (None, "") else str(row_idx),
        comment_text=str(raw["comment"]),
        reply_text=str(raw["reply"]),
        comment_author=str(raw["comment_author"]),
        reply_author=str(raw["reply_author"]),
        label=str(raw["label"]),
        timestamp=_coerce_timestamp(raw["timestamp"], row),
        topic=str(raw["topic"]),
    )
    rec.validate(row)
    return rec


def parse_dataset(path: str | Path, format: str = "jsonl") -> list[InteractionRecord]:
    """Parse a dataset file into records, preserving file order.

    Explicit ids must be unique; rows without an id get the 0-based row index
    as id.  Any malformed row raises :class:`DatasetError` naming the row.
    """
    path = Path(path)
    if format not in ("jsonl", "csv"):
        raise DatasetError(f"unknown format {format!r}")
    records: list[InteractionRecord] = []
    seen_ids: set[str] = set()

    if format == "jsonl":
        rows: Iterable[tuple[int, dict]] = []
        with path.open("r", encoding="utf-8") as fh:
            raws = []
            for i, line in enumerate(fh):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DatasetError(f"invalid JSON (row {len(raws) + 1}): {exc}") from None
                if not isinstance(obj, dict):
                    raise DatasetError(f"row is not a JSON object (row {len(raws) + 1})")
                raws.append(obj)
        rows = enumerate(raws)
    else:
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            rows = enumerate(list(reader))

    for row_idx, raw in rows:
        had_explicit_id = raw.get("id") not in (None, "")
        rec = _record_from_mapping(row_idx, raw)
        if had_explicit_id and rec.id in seen_ids:
            raise DatasetError(f"duplicate id {rec.id!r} (row {row_idx + 1})")
        seen_ids.add(rec.id)
        records.append(rec)
    return records


def write_dataset(records: Sequence[InteractionRecord], path: str | Path, format: str = "jsonl") -> None:
    """Serialize records so that parse -> write -> parse round-trips."""
    path = Path(path)
    if format == "jsonl":
        with path.open("w", encoding="utf-8") as fh:
            for r in records:
                fh.write(json.dumps(_record_to_mapping(r), sort_keys=True) + "\n")
    elif format == "csv":
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=("id",) + _FIELDS)
            writer.writeheader()
            for r in records:
                writer.writerow(_record_to_mapping(r))
    else:
        raise DatasetError(f"unknown format {format!r}")


def _record_to_mapping(r: InteractionRecord) -> dict:
    return {
        "id": r.id,
        "comment": r.comment_text,
        "reply": r.reply_text,
        "comment_author": r.comment_author,
        "reply_author": r.reply_author,
        "label": r.label,
        "timestamp": r.timestamp,
        "topic": r.topic,
    }


def _split_sorted(records: list[InteractionRecord], ratios) -> DatasetSplit:
    n = len(records)
    n_train = int(ratios[0] * n)
    n_dev = int(ratios[1] * n)
    split = DatasetSplit(
        train=records[:n_train],
        dev=records[n_train : n_train + n_dev],
        test=records[n_train + n_dev :],
    )
    if not split.train or not split.dev or not split.test:
        raise DatasetError(
            f"split sizes ({len(split.train)}, {len(split.dev)}, {len(split.test)}) "
            f"leave a part empty for n={n}, ratios={tuple(ratios)}"
        )
    return split


def temporal_split(
    records: Sequence[InteractionRecord],
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    per_topic: bool = False,
) -> DatasetSplit:
    """Sort by timestamp (stable, ties keep file order) and cut into three.

    The first ``floor(r1*N)`` records form train, the next ``floor(r2*N)``
    dev, the remainder test, so test always holds the latest data.  With
    ``per_topic=True`` each topic is cut separately and the parts are
    concatenated; the global train/dev timestamp boundary then only holds
    within each topic.
    """
    if not records:
        raise DatasetError("cannot split an empty dataset")
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise DatasetError(f"ratios must be three positive fractions, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DatasetError(f"ratios must sum to 1, got {sum(ratios)!r}")

    if per_topic:
        topics = sorted({r.topic for r in records})
        train: list[InteractionRecord] = []
        dev: list[InteractionRecord] = []
        test: list[InteractionRecord] = []
        for t in topics:
            part = _split_sorted(
                sorted((r for r in records if r.topic == t), key=lambda r: r.timestamp), ratios
            )
            train.extend(part.train)
            dev.extend(part.dev)
            test.extend(part.test)
        return DatasetSplit(
            train=sorted(train, key=lambda r: r.timestamp),
            dev=sorted(dev, key=lambda r: r.timestamp),
            test=sorted(test, key=lambda r: r.timestamp),
        )

    ordered = sorted(records, key=lambda r: r.timestamp)
    return _split_sorted(ordered, ratios)
