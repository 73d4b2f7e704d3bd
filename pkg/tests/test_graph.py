"""Snapshot construction, relation typing, interaction injection, subgraphs."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relstance.graph import (
    GraphError,
    RelationGraph,
    RelationType,
    aggregate_relations,
    build_graph,
    build_snapshots,
    extract_subgraph,
    inject_interaction_edges,
)


from tests.test_ingest import make_record


def records_for(pair_labels, ca="carol", ra="rae"):
    """One record per label, all on the same ordered (reply -> comment) pair."""
    return [make_record(i, ts=i, label=l, ca=ca, ra=ra) for i, l in enumerate(pair_labels)]


class TestSnapshots:
    def test_per_edge_single_agree(self):
        snaps = build_snapshots(records_for(["agree"]))
        assert len(snaps) == 1
        assert snaps[0].entries == {("rae", "carol"): 1}

    def test_per_edge_one_snapshot_per_record(self):
        snaps = build_snapshots(records_for(["agree", "disagree", "neutral"]))
        assert [s.entries[("rae", "carol")] for s in snaps] == [1, -1, 0]

    def test_self_reply_contributes_no_entry(self):
        snaps = build_snapshots([make_record(0, ca="a", ra="a")])
        assert snaps[0].entries == {}

    def test_window_majority(self):
        # {agree, agree, disagree} in one window -> most frequent opinion wins
        snaps = build_snapshots(records_for(["agree", "agree", "disagree"]), tau=100)
        assert len(snaps) == 1
        assert snaps[0].entries[("rae", "carol")] == 1

    def test_window_signed_tie_is_neutral(self):
        snaps = build_snapshots(records_for(["agree", "disagree"]), tau=100)
        assert snaps[0].entries[("rae", "carol")] == 0

    def test_window_neutral_tie_keeps_sign(self):
        snaps = build_snapshots(records_for(["agree", "neutral"]), tau=100)
        assert snaps[0].entries[("rae", "carol")] == 1

    def test_window_neutral_majority(self):
        snaps = build_snapshots(records_for(["neutral", "neutral", "disagree"]), tau=100)
        assert snaps[0].entries[("rae", "carol")] == 0

    def test_windows_anchor_at_earliest_timestamp(self):
        records = [
            make_record(0, ts=1000, label="agree"),
            make_record(1, ts=1099, label="agree"),
            make_record(2, ts=1100, label="disagree"),
        ]
        snaps = build_snapshots(records, tau=100)
        assert [s.window_index for s in snaps] == [0, 1]

    def test_bad_tau(self):
        with pytest.raises(GraphError, match="tau"):
            build_snapshots(records_for(["agree"]), tau=0)

    def test_empty(self):
        assert build_snapshots([]) == []


class TestAggregate:
    def test_sum_positive_is_supporter(self):
        g = build_graph(records_for(["agree", "disagree", "agree"]))
        src, dst = g.node_index("rae"), g.node_index("carol")
        assert g.edge_type(src, dst) is RelationType.SUPPORTER
        assert g.aggregate_weights[(src, dst)] == 1

    def test_zero_sum_with_history_is_acquaintance(self):
        g = build_graph(records_for(["agree", "disagree"]))
        assert g.edge_type(g.node_index("rae"), g.node_index("carol")) is RelationType.ACQUAINTANCE

    def test_only_neutral_pair_gets_no_edge(self):
        g = build_graph(records_for(["neutral", "neutral"]))
        assert g.edge_type(g.node_index("rae"), g.node_index("carol")) is None
        assert g.num_nodes == 2  # authors still registered

    def test_direction_is_reply_to_comment(self):
        g = build_graph([make_record(0, ca="target", ra="speaker", label="disagree")])
        assert g.edge_type(g.node_index("speaker"), g.node_index("target")) is RelationType.OPPONENT
        assert g.edge_type(g.node_index("target"), g.node_index("speaker")) is None

    def test_empty_input_empty_graph(self):
        g = aggregate_relations([])
        assert g.num_nodes == 0 and g.edges == []

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=0, max_value=3),
                st.integers(min_value=0, max_value=3),
                st.sampled_from(("agree", "disagree", "neutral")),
            ),
            min_size=1,
            max_size=10,
        )
    )
    def test_typing_matches_brute_force_oracle(self, events):
        records = [
            make_record(i, ts=i, label=label, ca=f"n{c}", ra=f"n{r}")
            for i, (r, c, label) in enumerate(events)
        ]
        snaps = build_snapshots(records)
        g = aggregate_relations(snaps)

        # brute force: direct summation of snapshot entries, then the rule
        totals, signed = {}, set()
        for s in snaps:
            for pair, v in s.entries.items():
                totals[pair] = totals.get(pair, 0) + v
                if v != 0:
                    signed.add(pair)
        for pair, total in totals.items():
            expect = (
                RelationType.SUPPORTER
                if total > 0
                else RelationType.OPPONENT
                if total < 0
                else RelationType.ACQUAINTANCE
                if pair in signed
                else None
            )
            got = g.edge_type(g.node_index(pair[0]), g.node_index(pair[1]))
            assert got is expect
        # no edges beyond the observed pairs
        assert len(g.edges) == sum(
            1 for p, t in totals.items() if t != 0 or p in signed
        )

    def test_edge_uniqueness_invariant(self):
        g = build_graph([make_record(i, ts=i, ca="c", ra="r") for i in range(5)])
        pairs = [(s, d) for s, _, d in g.edges]
        assert len(pairs) == len(set(pairs))


class TestInjection:
    def build(self, n_pairs=10):
        records = [make_record(i, ca=f"c{i}", ra=f"r{i}") for i in range(n_pairs)]
        return build_graph(records)

    def test_rho_zero_retypes_nothing(self):
        g = inject_interaction_edges(self.build(), [], rho=0.0, seed=1)
        assert g.retyped == {}
        assert all(r is not RelationType.INTERACTION for _, r, _ in g.edges)

    def test_rho_one_retypes_everything(self):
        g0 = self.build()
        g = inject_interaction_edges(g0, [], rho=1.0, seed=1)
        assert len(g.retyped) == len(g0.edges)
        assert all(r is RelationType.INTERACTION for _, r, _ in g.edges)

    def test_unseen_pair_gains_interaction_edge(self):
        g = inject_interaction_edges(self.build(), [("alice", "bob")], rho=0.0, seed=1)
        assert g.edge_type(g.node_index("alice"), g.node_index("bob")) is RelationType.INTERACTION

    def test_existing_pair_keeps_type(self):
        g0 = self.build()
        g = inject_interaction_edges(g0, [("r0", "c0")], rho=0.0, seed=1)
        assert g.edge_type(g.node_index("r0"), g.node_index("c0")) is RelationType.SUPPORTER

    def test_self_pair_registers_author_without_edge(self):
        g = inject_interaction_edges(self.build(), [("loner", "loner")], rho=0.0, seed=1)
        i = g.node_index("loner")
        assert all(i not in (s, d) for s, _, d in g.edges)

    def test_seeded_reproducibility(self):
        g0 = self.build(100)
        a = inject_interaction_edges(g0, [], rho=0.5, seed=7)
        b = inject_interaction_edges(g0, [], rho=0.5, seed=7)
        assert a.edges == b.edges and a.retyped == b.retyped

    def test_retyped_fraction_within_3_sigma(self):
        n = 10_000
        g0 = self.build(n)
        rho = 0.3
        g = inject_interaction_edges(g0, [], rho=rho, seed=3)
        frac = len(g.retyped) / n
        sigma = (rho * (1 - rho) / n) ** 0.5
        assert abs(frac - rho) <= 3 * sigma

    def test_originals_recorded(self):
        g0 = self.build(50)
        g = inject_interaction_edges(g0, [], rho=0.5, seed=2)
        for (s, d), orig in g.retyped.items():
            assert orig is RelationType.SUPPORTER
            assert g.edge_type(s, d) is RelationType.INTERACTION

    def test_bad_rho(self):
        with pytest.raises(GraphError, match="rho"):
            inject_interaction_edges(self.build(), [], rho=1.5, seed=0)


class TestSubgraph:
    def chain(self):
        # x -> a -> b -> y as supporter edges
        records = [
            make_record(0, ra="x", ca="a"),
            make_record(1, ra="a", ca="b"),
            make_record(2, ra="b", ca="y"),
        ]
        return build_graph(records)

    def test_isolated_pair(self):
        g = build_graph([make_record(0, ra="a", ca="b"), make_record(1, ra="c", ca="d")])
        sub, remap = extract_subgraph(g, g.node_index("a"), g.node_index("b"), radius=1)
        assert sub.num_nodes == 2 and len(sub.edges) == 1

    def test_radius_one_chain(self):
        g = self.chain()
        sub, remap = extract_subgraph(g, g.node_index("a"), g.node_index("b"), radius=1)
        assert sorted(sub.node_ids) == ["a", "b", "x", "y"]
        assert len(sub.edges) == 3

    def test_radius_zero_keeps_direct_edges_only(self):
        g = self.chain()
        sub, _ = extract_subgraph(g, g.node_index("a"), g.node_index("b"), radius=0)
        assert sorted(sub.node_ids) == ["a", "b"]
        assert len(sub.edges) == 1

    def test_two_isolated_nodes(self):
        g = build_graph([make_record(0, ra="a", ca="a"), make_record(1, ra="b", ca="b")])
        sub, _ = extract_subgraph(g, g.node_index("a"), g.node_index("b"), radius=1)
        assert sub.num_nodes == 2 and sub.edges == []

    def test_monotone_in_radius(self):
        g = self.chain()
        a, b = g.node_index("a"), g.node_index("b")
        sizes = [extract_subgraph(g, a, b, radius=r)[0].num_nodes for r in range(4)]
        assert sizes == sorted(sizes)

    def test_unknown_index(self):
        g = self.chain()
        with pytest.raises(GraphError, match="unknown"):
            extract_subgraph(g, 0, 99)

    def test_index_map_translates(self):
        g = self.chain()
        sub, remap = extract_subgraph(g, g.node_index("a"), g.node_index("b"), radius=1)
        for orig, new in remap.items():
            assert sub.node_ids[new] == g.node_ids[orig]


class TestSerialization:
    def test_round_trip(self, tmp_path):
        records = [make_record(i, ca=f"c{i % 3}", ra=f"r{i % 5}") for i in range(20)]
        g = build_graph(records)
        g = inject_interaction_edges(g, [("new", "c0")], rho=0.4, seed=9)
        path = tmp_path / "graph.json"
        g.save(path)
        g2 = RelationGraph.load(path)
        assert g2.node_ids == g.node_ids
        assert g2.edges == g.edges
        assert g2.aggregate_weights == g.aggregate_weights
        assert g2.retyped == g.retyped
        assert g2.meta["rho"] == 0.4

    def test_rejects_duplicate_pair(self):
        with pytest.raises(GraphError, match="duplicate"):
            RelationGraph(
                ["a", "b"],
                [(0, RelationType.SUPPORTER, 1), (0, RelationType.OPPONENT, 1)],
            )

    def test_rejects_inconsistent_weight(self):
        with pytest.raises(GraphError, match="inconsistent"):
            RelationGraph(
                ["a", "b"],
                [(0, RelationType.SUPPORTER, 1)],
                aggregate_weights={(0, 1): -2},
            )

    def test_relation_ordinals_fixed(self):
        assert [int(r) for r in RelationType] == [0, 1, 2, 3]
        assert RelationType.SUPPORTER.label == "supporter"
