import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mscale_gcn.graph import Graph, GraphError, connected_components
from mscale_gcn.hier import (
    BASE, ScaleRangeError, SnapshotPolicy, edge_betweenness, girvan_newman, linear_indices,
    read_dendrogram, scales_at, select_scales, snapshot_graph, write_dendrogram,
)

from oracles import bfs_distances, adjacency_lists, brute_edge_betweenness, random_connected_graph


class TestEdgeBetweenness:
    def test_examples(self, two_triangles):
        assert edge_betweenness(Graph.from_pairs(3, [(0, 1), (1, 2)])) == {(0, 1): 2.0, (1, 2): 2.0}
        assert set(edge_betweenness(Graph.from_pairs(3, [(0, 1), (1, 2), (0, 2)])).values()) == {1.0}
        assert edge_betweenness(two_triangles)[(2, 3)] == 9.0

    def test_empty(self):
        assert edge_betweenness(Graph(3, np.empty((0, 2)))) == {}

    def test_total_equals_sum_of_distances(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            n = int(rng.integers(2, 13))
            pairs = random_connected_graph(rng, n)
            nb = adjacency_lists(n, pairs)
            total = sum(d for s in range(n) for t, d in bfs_distances(nb, s).items() if t > s)
            got = sum(edge_betweenness(Graph.from_pairs(n, pairs)).values())
            assert got == pytest.approx(total, abs=1e-9)

    def test_disconnected(self):
        pairs = [(0, 1), (1, 2), (3, 4)]
        got = edge_betweenness(Graph.from_pairs(5, pairs))
        assert got == pytest.approx(brute_edge_betweenness(5, pairs), abs=1e-12)


class TestGirvanNewman:
    def test_bridge_first(self, two_triangles):
        d = girvan_newman(two_triangles)
        assert d.removed_edges()[0].tolist() == [2, 3]

    def test_single_edge(self):
        d = girvan_newman(Graph.from_pairs(2, [(0, 1)]))
        assert d.removal_order.tolist() == [0]
        assert len(d.snapshots) == 1 and not d.snapshots[0].usable and d.n_usable == 0

    def test_no_edges(self):
        with pytest.raises(GraphError):
            girvan_newman(Graph(3, np.empty((0, 2))))

    def test_tie_break_lexicographic(self):
        # a 4-cycle: all edges tie at 2.0, so (0, 1) goes first
        d = girvan_newman(Graph.from_pairs(4, [(0, 1), (1, 2), (2, 3), (0, 3)]))
        assert d.removed_edges()[0].tolist() == [0, 1]

    def test_invariants(self, karate):
        d = girvan_newman(karate)
        assert sorted(d.removal_order.tolist()) == list(range(78))
        remaining = [s.edges_remaining for s in d.snapshots]
        comps = [s.component_count for s in d.snapshots]
        assert np.all(np.diff(remaining) < 0) and np.all(np.diff(comps) >= 0)
        assert comps[-1] == 34 and remaining[-1] == 0
        assert d.n_usable == 77

    def test_karate_first_split(self, karate, karate_factions):
        factions, reference = karate_factions
        d = girvan_newman(karate, SnapshotPolicy.ON_COMPONENT_CHANGE)
        first = snapshot_graph(d, 0)
        count, labels = connected_components(first)
        assert count == 2
        assert np.array_equal(labels, reference)
        agree = max(np.sum(labels == factions), np.sum(labels != factions))
        assert agree >= 32

    def test_deterministic(self, karate):
        assert girvan_newman(karate) == girvan_newman(karate)

    def test_component_counts_match_graphs(self, karate):
        d = girvan_newman(karate)
        for k in (0, 10, 40, 76):
            assert connected_components(snapshot_graph(d, k))[0] == d.snapshots[k].component_count


class TestSnapshots:
    def test_every_removal(self, two_triangles):
        d = girvan_newman(two_triangles)
        assert len(d.snapshots) == 7 and d.n_usable == 6
        assert snapshot_graph(d, 0).n_edges == 6
        assert snapshot_graph(d, 6).n_edges == 0
        assert snapshot_graph(d, BASE) == two_triangles

    def test_triangle_on_component_change(self):
        # first removal leaves a path (1 component); the second isolates a
        # node (1 -> 2); the third isolates the rest (2 -> 3)
        d = girvan_newman(Graph.from_pairs(3, [(0, 1), (1, 2), (0, 2)]), "on_component_change")
        assert [(s.removed_prefix_length, s.component_count) for s in d.snapshots] == [(2, 2), (3, 3)]
        assert snapshot_graph(d, 0).n_edges == 1
        assert d.n_usable == 1

    def test_out_of_range(self, two_triangles):
        d = girvan_newman(two_triangles)
        with pytest.raises(ScaleRangeError):
            snapshot_graph(d, 7)
        with pytest.raises(ScaleRangeError):
            snapshot_graph(d, -2)

    def test_node_count_preserved(self, karate):
        d = girvan_newman(karate)
        assert all(snapshot_graph(d, k).n_nodes == 34 for k in range(len(d.snapshots)))


class TestSelectScales:
    def test_linear_indices(self):
        assert linear_indices(529, 3) == [0, 264, 528]
        assert linear_indices(5, 5) == [0, 1, 2, 3, 4]
        assert linear_indices(10, 1) == [0]

    def test_range_errors(self):
        with pytest.raises(ScaleRangeError):
            linear_indices(3, 4)
        with pytest.raises(ScaleRangeError):
            linear_indices(3, 0)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(2, 6000), st.data())
    def test_increasing_with_endpoints(self, u, data):
        count = data.draw(st.integers(2, min(u, 200)))
        idx = linear_indices(u, count)
        assert idx[0] == 0 and idx[-1] == u - 1 and len(idx) == count
        assert all(b > a for a, b in zip(idx, idx[1:]))

    def test_select_scales_materializes(self, karate):
        d = girvan_newman(karate)
        ss = select_scales(d, 3)
        assert ss.indices == (0, 38, 76) and len(ss) == 3
        assert [g.n_edges for g in ss.scales] == [77, 39, 1]

    def test_all_usable(self, two_triangles):
        d = girvan_newman(two_triangles)
        assert select_scales(d, d.n_usable).indices == tuple(range(6))

    def test_scales_at(self, two_triangles):
        d = girvan_newman(two_triangles)
        ss = scales_at(d, [BASE, 0, 3])
        assert [g.n_edges for g in ss.scales] == [7, 6, 3]
        with pytest.raises(ScaleRangeError, match="increasing"):
            scales_at(d, [2, 1])
        with pytest.raises(ScaleRangeError, match="not usable"):
            scales_at(d, [0, 6])


class TestDendrogramFile:
    @pytest.mark.parametrize("policy", list(SnapshotPolicy))
    def test_roundtrip(self, tmp_path, karate, policy):
        d = girvan_newman(karate, policy)
        path = tmp_path / "d.txt"
        write_dendrogram(d, path)
        assert read_dendrogram(path) == d
        assert path.read_text().splitlines()[0] == f"34 78 {policy.value}"

    def test_isolated_tail_nodes_roundtrip(self, tmp_path):
        # node 3 has no edges; the header's node count keeps it
        d = girvan_newman(Graph.from_pairs(4, [(0, 1), (1, 2)]))
        write_dendrogram(d, tmp_path / "d.txt")
        assert read_dendrogram(tmp_path / "d.txt").base.n_nodes == 4

    def test_malformed(self, tmp_path):
        path = tmp_path / "d.txt"
        path.write_text("3 2 every_removal\n0 1\n")
        with pytest.raises(GraphError):
            read_dendrogram(path)


def test_random_graphs_end_to_end():
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = int(rng.integers(3, 25))
        g = Graph.from_pairs(n, random_connected_graph(rng, n, 0.2))
        d = girvan_newman(g)
        assert len(d.removal_order) == g.n_edges
        assert d.snapshots[-1].component_count == n
