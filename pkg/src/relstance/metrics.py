"""Per-class precision/recall/F1, accuracy, macro-F1, and length-bucket
breakdowns for the three stance classes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .ingest import LABELS, InteractionRecord
from .textfeat import token_length

LENGTH_BUCKETS = ("(0,100]", "(100,200]", ">200")


class MetricsError(ValueError):
    """Invalid prediction/gold input."""


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class MetricsReport:
    """Evaluation summary; macro_f1 is the unweighted mean of the three
    per-class F1 scores (absent classes count as 0)."""

    accuracy: float
    macro_f1: float
    per_class: dict[str, ClassMetrics]
    total: int
    key: str | None = None

    def to_dict(self) -> dict:
        return {
            "key": self.key,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "total": self.total,
            "per_class": {
                label: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for label, m in self.per_class.items()
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MetricsReport":
        return cls(
            accuracy=doc["accuracy"],
            macro_f1=doc["macro_f1"],
            total=doc["total"],
            key=doc.get("key"),
            per_class={
                label: ClassMetrics(**m) for label, m in doc["per_class"].items()
            },
        )


def compute_metrics(
    preds: Sequence[str], golds: Sequence[str], key: str | None = None
) -> MetricsReport:
    """Confusion-matrix metrics with 0/0 ratios defined as 0."""
    if len(preds) != len(golds):
        raise MetricsError(f"{len(preds)} predictions vs {len(golds)} golds")
    if not golds:
        raise MetricsError("empty evaluation set")
    for x in (*preds, *golds):
        if x not in LABELS:
            raise MetricsError(f"unknown class label {x!r}")

    per_class: dict[str, ClassMetrics] = {}
    correct = sum(1 for p, g in zip(preds, golds) if p == g)
    for label in LABELS:
        tp = sum(1 for p, g in zip(preds, golds) if p == label and g == label)
        fp = sum(1 for p, g in zip(preds, golds) if p == label and g != label)
        fn = sum(1 for p, g in zip(preds, golds) if p != label and g == label)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        per_class[label] = ClassMetrics(prec, rec, f1, tp + fn)

    return MetricsReport(
        accuracy=correct / len(golds),
        macro_f1=sum(m.f1 for m in per_class.values()) / len(LABELS),
        per_class=per_class,
        total=len(golds),
        key=key,
    )


def _zero_report(key: str) -> MetricsReport:
    return MetricsReport(
        accuracy=0.0,
        macro_f1=0.0,
        per_class={label: ClassMetrics(0.0, 0.0, 0.0, 0) for label in LABELS},
        total=0,
        key=key,
    )


def bucket_by_length(
    examples: Sequence[InteractionRecord],
    preds: Sequence[str],
    golds: Sequence[str],
) -> dict[str, MetricsReport]:
    """One report per token-length bucket; the buckets partition the
    examples (lengths of 0 fall into the first bucket)."""
    if not len(examples) == len(preds) == len(golds):
        raise MetricsError("examples, preds and golds must align")
    groups: dict[str, tuple[list[str], list[str]]] = {b: ([], []) for b in LENGTH_BUCKETS}
    for ex, p, g in zip(examples, preds, golds):
        n = token_length(ex)
        bucket = LENGTH_BUCKETS[0] if n <= 100 else LENGTH_BUCKETS[1] if n <= 200 else LENGTH_BUCKETS[2]
        groups[bucket][0].append(p)
        groups[bucket][1].append(g)
    return {
        bucket: compute_metrics(ps, gs, key=bucket) if gs else _zero_report(bucket)
        for bucket, (ps, gs) in groups.items()
    }
