"""Compare the numba kernels with the pure-numpy fallbacks.

    python benchmarks/bench_kernels.py [--nodes 2708] [--degree 3.9] [--gn-nodes 300]

Brandes and CSR propagation run on a Cora-sized random graph; the full
Girvan-Newman loop runs on a smaller one (it is O(m^2 n)). The numba column
includes no compile time: every kernel is called once before timing.
"""

import argparse
import statistics
import time

import numpy as np

from mscale_gcn import kernels
from mscale_gcn._accel import USE_NUMBA
from mscale_gcn.graph import Graph, build_propagation, connected_components


def random_graph(n, mean_degree, seed):
    rng = np.random.default_rng(seed)
    m = int(n * mean_degree / 2)
    a, b = rng.integers(0, n, size=(2, 2 * m))
    keep = a != b
    pairs = {(min(i, j), max(i, j)) for i, j in zip(a[keep].tolist(), b[keep].tolist())}
    return Graph.from_pairs(n, sorted(pairs)[:m])


def clock(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=2708)
    ap.add_argument("--degree", type=float, default=3.9)
    ap.add_argument("--gn-nodes", type=int, default=300)
    ap.add_argument("--features", type=int, default=64)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    g = random_graph(args.nodes, args.degree, seed=0)
    indptr, nbr, eid = g.arcs()
    alive = np.ones(g.n_edges, dtype=np.bool_)
    sources = np.arange(g.n_nodes)
    p = build_propagation(g)
    x = np.random.default_rng(1).normal(size=(g.n_nodes, args.features))

    small = random_graph(args.gn_nodes, args.degree, seed=2)
    s_indptr, s_nbr, s_eid = small.arcs()
    n_comp, _ = connected_components(small)

    cases = {
        f"brandes ({g.n_nodes} nodes, {g.n_edges} edges)": (
            lambda: kernels.brandes_edges_nb(indptr, nbr, eid, alive, sources, g.n_edges),
            lambda: kernels.brandes_edges_np(indptr, nbr, eid, alive, sources, g.n_edges)),
        f"girvan-newman ({small.n_nodes} nodes, {small.n_edges} edges)": (
            lambda: kernels.girvan_newman_order_nb(s_indptr, s_nbr, s_eid, small.edges, n_comp,
                                                   kernels.TIE_RTOL),
            lambda: kernels.girvan_newman_order_np(s_indptr, s_nbr, s_eid, small.edges, n_comp,
                                                   kernels.TIE_RTOL)),
        f"csr propagation ({g.n_nodes} x {args.features})": (
            lambda: kernels.csr_matmul_nb(p.indptr, p.indices, p.data, x),
            lambda: kernels.csr_matmul_np(p.indptr, p.indices, p.data, x)),
    }

    if not USE_NUMBA:
        print("numba disabled or missing: timing the numpy kernels only")
    print(f"{'kernel':<46} {'numba s':>10} {'numpy s':>10} {'speedup':>8}")
    for name, (fast, slow) in cases.items():
        t_np = clock(slow, args.repeats)
        if USE_NUMBA:
            fast()  # compile
            t_nb = clock(fast, args.repeats)
            print(f"{name:<46} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>7.1f}x")
        else:
            print(f"{name:<46} {'-':>10} {t_np:>10.4f} {'-':>8}")


if __name__ == "__main__":
    main()
