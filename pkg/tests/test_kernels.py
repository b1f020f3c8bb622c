import os
import subprocess
import sys

import numpy as np
import pytest

from mscale_gcn import kernels
from mscale_gcn._accel import HAS_NUMBA
from mscale_gcn.graph import Graph

from oracles import brute_edge_betweenness, random_connected_graph, random_graph

BRANDES = [kernels.brandes_edges_nb, kernels.brandes_edges_np]
GN = [kernels.girvan_newman_order_nb, kernels.girvan_newman_order_np]
MATMUL = [kernels.csr_matmul_nb, kernels.csr_matmul_np]


def _betweenness(fn, g, alive=None):
    indptr, nbr, eid = g.arcs()
    if alive is None:
        alive = np.ones(g.n_edges, dtype=np.bool_)
    return fn(indptr, nbr, eid, alive, np.arange(g.n_nodes), g.n_edges)


def test_csr_arcs_sorted_and_symmetric():
    g = Graph.from_pairs(4, [(2, 3), (0, 2), (0, 1)])
    indptr, nbr, eid = kernels.csr_arcs(4, g.edges)
    assert indptr.tolist() == [0, 2, 3, 5, 6]
    assert nbr.tolist() == [1, 2, 0, 0, 3, 2]
    for v in range(4):
        for k in range(indptr[v], indptr[v + 1]):
            assert sorted((v, int(nbr[k]))) == g.edges[eid[k]].tolist()


@pytest.mark.parametrize("fn", BRANDES, ids=["numba", "numpy"])
class TestBrandes:
    def test_path(self, fn):
        g = Graph.from_pairs(3, [(0, 1), (1, 2)])
        assert _betweenness(fn, g).tolist() == [2.0, 2.0]

    def test_triangle(self, fn):
        g = Graph.from_pairs(3, [(0, 1), (1, 2), (0, 2)])
        assert _betweenness(fn, g).tolist() == [1.0, 1.0, 1.0]

    def test_bridge(self, fn, two_triangles):
        eb = dict(zip(map(tuple, two_triangles.edges.tolist()), _betweenness(fn, two_triangles)))
        assert eb[(2, 3)] == 9.0
        assert eb[(0, 2)] == eb[(1, 2)] == eb[(3, 4)] == eb[(3, 5)] == 4.0
        assert eb[(0, 1)] == eb[(4, 5)] == 1.0

    def test_brute_force_random(self, fn):
        rng = np.random.default_rng(5)
        for _ in range(40):
            n = int(rng.integers(2, 11))
            pairs = random_graph(rng, n, rng.uniform(0.1, 0.7))
            if not pairs:
                continue
            g = Graph.from_pairs(n, pairs)
            want = brute_edge_betweenness(n, g.edges.tolist())
            got = _betweenness(fn, g)
            for (i, j), v in zip(g.edges.tolist(), got):
                assert v == pytest.approx(want[(i, j)], abs=1e-9)

    def test_dead_edges_ignored(self, fn, two_triangles):
        alive = np.ones(7, dtype=np.bool_)
        bridge = two_triangles.edges.tolist().index([2, 3])
        alive[bridge] = False
        got = _betweenness(fn, two_triangles, alive)
        want = _betweenness(fn, two_triangles.without([bridge]))
        assert got[bridge] == 0.0
        assert np.allclose(np.delete(got, bridge), want, atol=1e-12)

    def test_source_subset_is_partial_sum(self, fn, karate):
        indptr, nbr, eid = karate.arcs()
        alive = np.ones(karate.n_edges, dtype=np.bool_)
        half = np.arange(17)
        a = fn(indptr, nbr, eid, alive, half, karate.n_edges)
        b = fn(indptr, nbr, eid, alive, np.arange(17, 34), karate.n_edges)
        full = fn(indptr, nbr, eid, alive, np.arange(34), karate.n_edges)
        assert np.allclose(a + b, full, atol=1e-12)


def test_numba_and_numpy_betweenness_agree():
    rng = np.random.default_rng(9)
    for _ in range(20):
        n = int(rng.integers(5, 60))
        g = Graph.from_pairs(n, random_connected_graph(rng, n, 0.1))
        a, b = (_betweenness(fn, g) for fn in BRANDES)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("fn", GN, ids=["numba", "numpy"])
def test_gn_removal_is_permutation(fn, karate):
    indptr, nbr, eid = karate.arcs()
    order, comps = fn(indptr, nbr, eid, karate.edges, 1, kernels.TIE_RTOL)
    assert sorted(order.tolist()) == list(range(karate.n_edges))
    assert comps[-1] == 34 and np.all(np.diff(comps) >= 0)


def test_gn_paths_agree():
    rng = np.random.default_rng(2)
    for _ in range(10):
        n = int(rng.integers(4, 40))
        g = Graph.from_pairs(n, random_connected_graph(rng, n, 0.15))
        indptr, nbr, eid = g.arcs()
        a = GN[0](indptr, nbr, eid, g.edges, 1, kernels.TIE_RTOL)
        b = GN[1](indptr, nbr, eid, g.edges, 1, kernels.TIE_RTOL)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_gn_incremental_matches_full_recompute():
    # removal order with full recomputation at every step, written out longhand
    rng = np.random.default_rng(4)
    for _ in range(10):
        n = int(rng.integers(4, 16))
        g = Graph.from_pairs(n, random_connected_graph(rng, n, 0.25))
        indptr, nbr, eid = g.arcs()
        alive = np.ones(g.n_edges, dtype=np.bool_)
        expect = []
        for _ in range(g.n_edges):
            eb = kernels.brandes_edges_np(indptr, nbr, eid, alive, np.arange(n), g.n_edges)
            live = np.flatnonzero(alive)
            best = eb[live].max()
            e = int(live[np.argmax(eb[live] >= best - kernels.TIE_RTOL * max(1.0, best))])
            expect.append(e)
            alive[e] = False
        order, _ = kernels.girvan_newman_order(indptr, nbr, eid, g.edges, 1, kernels.TIE_RTOL)
        assert order.tolist() == expect


@pytest.mark.parametrize("fn", MATMUL, ids=["numba", "numpy"])
def test_csr_matmul(fn):
    rng = np.random.default_rng(0)
    dense = rng.normal(size=(9, 6)) * (rng.random((9, 6)) < 0.4)
    dense[3] = 0.0  # an empty row
    rows, cols = np.nonzero(dense)
    indptr = np.zeros(10, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=9), out=indptr[1:])
    x = rng.normal(size=(6, 4))
    assert np.allclose(fn(indptr, cols.astype(np.int64), dense[rows, cols], x), dense @ x, atol=1e-13)


@pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("flag, expect", [("1", "False"), ("", "True")])
def test_env_flag_selects_path(flag, expect):
    env = dict(os.environ, MSCALE_GCN_NO_NUMBA=flag)
    code = ("from mscale_gcn import kernels, _accel; "
            "print(_accel.USE_NUMBA, kernels.brandes_edges is kernels.brandes_edges_nb)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == [expect, expect]
