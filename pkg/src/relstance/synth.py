"""Deterministic synthetic datasets for capability checks.

``two_community_records`` yields a signed graph with supporter edges inside
two communities and opponent edges across them, exercising held-out link
prediction.  ``fusion_records`` yields comment-reply pairs whose label is a
deterministic function of the latent relation between the two authors while
the texts are pure noise, exercising the text/relation fusion gain.
"""

from __future__ import annotations

import numpy as np

from .ingest import InteractionRecord

_WORDS = (
    "const flux ember orbit quartz nimbus cedar delta onyx prism vapor "
    "raven tundra willow zephyr basalt iris krypton lotus meadow"
).split()


def _noise_text(rng: np.random.Generator, n_tokens: int = 8) -> str:
    return " ".join(_WORDS[int(i)] for i in rng.integers(len(_WORDS), size=n_tokens))


def two_community_records(
    n_nodes: int = 60,
    p_within: float = 0.85,
    p_cross: float = 0.85,
    seed: int = 0,
    topic: str = "synthetic",
) -> list[InteractionRecord]:
    """Two equal communities; each ordered within-community pair interacts
    with an agreeing record w.p. ``p_within`` (aggregating to a supporter
    edge) and each cross pair with a disagreeing record w.p. ``p_cross``
    (aggregating to an opponent edge)."""
    if n_nodes % 2:
        raise ValueError("n_nodes must be even")
    rng = np.random.default_rng([seed, 21])
    half = n_nodes // 2
    records = []
    ts = 0
    for i in range(n_nodes):
        for j in range(n_nodes):
            if i == j:
                continue
            same = (i < half) == (j < half)
            if rng.random() >= (p_within if same else p_cross):
                continue
            ts += 1
            records.append(
                InteractionRecord(
                    id=str(len(records)),
                    comment_text=_noise_text(rng),
                    reply_text=_noise_text(rng),
                    comment_author=f"u{j}",
                    reply_author=f"u{i}",
                    label="agree" if same else "disagree",
                    timestamp=ts,
                    topic=topic,
                )
            )
    return records


# per latent relation: the eight training-window labels, then dev, then test.
# The acquaintance history sums to zero with signed entries while neutral
# stays the majority label for those pairs.
_FUSION_LABELS = {
    "supporter": ["agree"] * 8 + ["agree", "agree"],
    "opponent": ["disagree"] * 8 + ["disagree", "disagree"],
    "acquaintance": [
        "agree", "disagree", "neutral", "neutral",
        "agree", "disagree", "neutral", "neutral",
        "neutral", "neutral",
    ],
}
_FUSION_KINDS = ("supporter", "opponent", "acquaintance")


def fusion_records(
    n_pairs: int = 200,
    events_per_pair: int = 10,
    seed: int = 0,
    n_topics: int = 1,
) -> list[InteractionRecord]:
    """Author pairs with a latent relation (cycling supporter / opponent /
    acquaintance) interact ``events_per_pair`` times; the last two events per
    pair land in the dev and test windows of an 80/10/10 temporal split.
    Texts are noise, so only the relation carries label signal."""
    if events_per_pair != 10:
        raise ValueError("the label schedule is laid out for 10 events per pair")
    rng = np.random.default_rng([seed, 22])
    records = []
    for k in range(events_per_pair):
        for p in range(n_pairs):
            kind = _FUSION_KINDS[p % 3]
            records.append(
                InteractionRecord(
                    id=str(len(records)),
                    comment_text=_noise_text(rng),
                    reply_text=_noise_text(rng),
                    comment_author=f"b{p}",
                    reply_author=f"a{p}",
                    label=_FUSION_LABELS[kind][k],
                    timestamp=k * n_pairs + p,
                    topic=f"topic{p % n_topics}",
                )
            )
    return records


def fusion_expected_relation(pair_index: int) -> str:
    """Latent relation assigned to the pair with the given index."""
    return _FUSION_KINDS[pair_index % 3]
