#!/usr/bin/env python3
"""Walkthrough: from raw comment-reply interactions to a typed relation graph.

Every interaction carries a stance (agree / disagree / neutral) from the
reply author toward the comment author.  Interactions become signed snapshot
entries, snapshots sum into aggregate weights, and the sign of the sum types
each directed edge.
"""

from relstance import (
    InteractionRecord,
    RelationType,
    aggregate_relations,
    build_snapshots,
    inject_interaction_edges,
)


def record(i, reply_author, comment_author, label, ts):
    return InteractionRecord(
        id=str(i),
        comment_text="(comment text)",
        reply_text="(reply text)",
        comment_author=comment_author,
        reply_author=reply_author,
        label=label,
        timestamp=ts,
        topic="demo",
    )


# A short history between three people.  bea answers alice twice (agreeing on
# balance), alice and cal trade blows evenly, and cal agrees once with bea.
history = [
    record(0, "bea", "alice", "agree", 100),
    record(1, "bea", "alice", "disagree", 200),
    record(2, "bea", "alice", "agree", 300),
    record(3, "alice", "cal", "agree", 400),
    record(4, "alice", "cal", "disagree", 500),
    record(5, "cal", "bea", "agree", 600),
]

# One snapshot per interaction (the default, suited to sparse histories).
snapshots = build_snapshots(history)
print("per-interaction snapshots:")
for s in snapshots:
    print(f"  window {s.window_index}: {s.entries}")

graph = aggregate_relations(snapshots)
print("\naggregated edges (reply author -> comment author):")
for src, rel, dst in graph.edges:
    w = graph.aggregate_weights[(src, dst)]
    print(f"  {graph.node_ids[src]:>6} --{rel.label}({w:+d})--> {graph.node_ids[dst]}")

# Wider windows take the most frequent opinion per pair inside each window.
windowed = build_snapshots(history, tau=300)
print("\nwith tau=300s windows:", [s.entries for s in windowed])

# Held-out pairs (from dev/test data) enter as type-erased interaction edges
# so their true relation never leaks; training edges are also retyped with
# probability rho to simulate unknown relations.
augmented = inject_interaction_edges(graph, [("dana", "alice")], rho=0.5, seed=7)
print("\nafter injection (rho=0.5):")
for src, rel, dst in augmented.edges:
    print(f"  {augmented.node_ids[src]:>6} --{rel.label}--> {augmented.node_ids[dst]}")
print("retyped training edges (original types kept aside):",
      {(augmented.node_ids[s], augmented.node_ids[d]): r.label
       for (s, d), r in augmented.retyped.items()})
