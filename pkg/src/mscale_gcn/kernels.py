"""Hot loops: Brandes edge betweenness, the Girvan-Newman removal loop and
CSR x dense products.

Every kernel exists twice: a ``*_nb`` version compiled with numba and a
``*_np`` version written against numpy only. The public names
(``brandes_edges``, ``girvan_newman_order``, ``csr_matmul``) point at one or
the other depending on :data:`mscale_gcn._accel.USE_NUMBA`.

Graphs are passed as a symmetric CSR arc structure: ``indptr`` / ``nbr`` give
the neighbours of each node and ``eid`` maps each arc to its undirected edge
id. ``alive`` masks removed edges without rebuilding the arrays.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

# Relative slack when comparing betweenness values for a tie. Different
# summation orders (numba vs numpy, full vs per-component recompute) move
# values by a few ulps.
TIE_RTOL = 1e-9


def csr_arcs(n_nodes, edges):
    """Build ``(indptr, nbr, eid)`` from an ``(M, 2)`` edge array.

    Neighbours of each node are sorted ascending, so traversal order is a
    pure function of the edge set.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    m = edges.shape[0]
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    ids = np.concatenate([np.arange(m), np.arange(m)])
    order = np.lexsort((dst, src))
    src, dst, ids = src[order], dst[order], ids[order]
    indptr = np.zeros(n_nodes + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n_nodes), out=indptr[1:])
    return indptr, dst.astype(np.int64), ids.astype(np.int64)


# --------------------------------------------------------------------------
# Brandes edge betweenness


@njit(cache=True, nogil=True)
def _brandes_accumulate_nb(indptr, nbr, eid, alive, sources, eb):
    n = indptr.size - 1
    dist = np.full(n, -1, dtype=np.int64)
    sigma = np.zeros(n)
    delta = np.zeros(n)
    order = np.empty(n, dtype=np.int64)

    for s in sources:
        dist[s] = 0
        sigma[s] = 1.0
        order[0] = s
        head = 0
        tail = 1
        while head < tail:
            v = order[head]
            head += 1
            dv = dist[v]
            for k in range(indptr[v], indptr[v + 1]):
                if not alive[eid[k]]:
                    continue
                w = nbr[k]
                if dist[w] < 0:
                    dist[w] = dv + 1
                    order[tail] = w
                    tail += 1
                if dist[w] == dv + 1:
                    sigma[w] += sigma[v]

        # reverse BFS order: a node's dependency is final before its
        # predecessors read it
        for idx in range(tail - 1, -1, -1):
            w = order[idx]
            dw = dist[w]
            coeff = (1.0 + delta[w]) / sigma[w]
            for k in range(indptr[w], indptr[w + 1]):
                if not alive[eid[k]]:
                    continue
                v = nbr[k]
                if dist[v] == dw - 1:
                    c = sigma[v] * coeff
                    eb[eid[k]] += c
                    delta[v] += c

        for idx in range(tail):
            w = order[idx]
            dist[w] = -1
            sigma[w] = 0.0
            delta[w] = 0.0


@njit(cache=True, nogil=True)
def brandes_edges_nb(indptr, nbr, eid, alive, sources, n_edges):
    eb = np.zeros(n_edges)
    _brandes_accumulate_nb(indptr, nbr, eid, alive, sources, eb)
    for e in range(n_edges):
        eb[e] *= 0.5
    return eb


def brandes_edges_np(indptr, nbr, eid, alive, sources, n_edges):
    n = indptr.size - 1
    keep = alive[eid]
    arc_src = np.repeat(np.arange(n), np.diff(indptr))[keep]
    arc_dst = nbr[keep]
    arc_eid = eid[keep]
    live_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(arc_src, minlength=n), out=live_ptr[1:])

    eb = np.zeros(n_edges)
    for s in np.asarray(sources, dtype=np.int64):
        dist = np.full(n, -1, dtype=np.int64)
        sigma = np.zeros(n)
        dist[s] = 0
        sigma[s] = 1.0
        frontier = np.array([s], dtype=np.int64)
        levels = []
        depth = 0
        while frontier.size:
            starts = live_ptr[frontier]
            counts = live_ptr[frontier + 1] - starts
            total = counts.sum()
            if total == 0:
                break
            offsets = np.repeat(starts - np.cumsum(counts) + counts, counts)
            arcs = offsets + np.arange(total)
            dst = arc_dst[arcs]
            fresh = dist[dst] < 0
            dist[dst[fresh]] = depth + 1
            down = dist[dst] == depth + 1
            arcs = arcs[down]
            np.add.at(sigma, arc_dst[arcs], sigma[arc_src[arcs]])
            levels.append(arcs)
            frontier = np.unique(dst[down])
            depth += 1

        delta = np.zeros(n)
        for arcs in reversed(levels):
            v = arc_src[arcs]
            w = arc_dst[arcs]
            c = sigma[v] / sigma[w] * (1.0 + delta[w])
            np.add.at(eb, arc_eid[arcs], c)
            np.add.at(delta, v, c)
    return eb * 0.5


# --------------------------------------------------------------------------
# Girvan-Newman removal loop


@njit(cache=True, nogil=True)
def _component_of_nb(indptr, nbr, eid, alive, start, mark, stamp, queue):
    mark[start] = stamp
    queue[0] = start
    head = 0
    tail = 1
    while head < tail:
        v = queue[head]
        head += 1
        for k in range(indptr[v], indptr[v + 1]):
            if alive[eid[k]]:
                w = nbr[k]
                if mark[w] != stamp:
                    mark[w] = stamp
                    queue[tail] = w
                    tail += 1
    return queue[:tail].copy()


@njit(cache=True, nogil=True)
def _pick_edge_nb(eb, alive, rtol):
    best = -1.0
    for e in range(eb.size):
        if alive[e] and eb[e] > best:
            best = eb[e]
    cut = best - rtol * max(1.0, best)
    for e in range(eb.size):
        if alive[e] and eb[e] >= cut:
            return e
    return -1


@njit(cache=True, nogil=True)
def girvan_newman_order_nb(indptr, nbr, eid, edges, n_components, rtol):
    n = indptr.size - 1
    m = edges.shape[0]
    alive = np.ones(m, dtype=np.bool_)
    eb = brandes_edges_nb(indptr, nbr, eid, alive, np.arange(n), m)
    order = np.empty(m, dtype=np.int64)
    comps = np.empty(m, dtype=np.int64)
    mark = np.zeros(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    stamp = 0
    for step in range(m):
        e = _pick_edge_nb(eb, alive, rtol)
        alive[e] = False
        eb[e] = 0.0
        order[step] = e
        u = edges[e, 0]
        v = edges[e, 1]
        stamp += 1
        side_u = _component_of_nb(indptr, nbr, eid, alive, u, mark, stamp, queue)
        if mark[v] == stamp:
            affected = side_u
        else:
            n_components += 1
            side_v = _component_of_nb(indptr, nbr, eid, alive, v, mark, stamp, queue)
            affected = np.concatenate((side_u, side_v))
        comps[step] = n_components
        affected.sort()
        fresh = brandes_edges_nb(indptr, nbr, eid, alive, affected, m)
        for node in affected:
            for k in range(indptr[node], indptr[node + 1]):
                if alive[eid[k]]:
                    eb[eid[k]] = fresh[eid[k]]
    return order, comps


def _component_of_np(adjacency, alive, start):
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w, e in adjacency[v]:
            if alive[e] and w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def girvan_newman_order_np(indptr, nbr, eid, edges, n_components, rtol):
    n = indptr.size - 1
    m = edges.shape[0]
    alive = np.ones(m, dtype=bool)
    adjacency = [list(zip(nbr[indptr[v]:indptr[v + 1]].tolist(), eid[indptr[v]:indptr[v + 1]].tolist()))
                 for v in range(n)]
    eb = brandes_edges_np(indptr, nbr, eid, alive, np.arange(n), m)
    order = np.empty(m, dtype=np.int64)
    comps = np.empty(m, dtype=np.int64)
    for step in range(m):
        live = np.flatnonzero(alive)
        best = eb[live].max()
        e = int(live[np.argmax(eb[live] >= best - rtol * max(1.0, best))])
        alive[e] = False
        eb[e] = 0.0
        order[step] = e
        u, v = int(edges[e, 0]), int(edges[e, 1])
        affected = _component_of_np(adjacency, alive, u)
        if v not in affected:
            n_components += 1
            affected |= _component_of_np(adjacency, alive, v)
        comps[step] = n_components
        nodes = np.array(sorted(affected), dtype=np.int64)
        fresh = brandes_edges_np(indptr, nbr, eid, alive, nodes, m)
        touched = np.unique(np.concatenate([eid[indptr[x]:indptr[x + 1]] for x in nodes]))
        touched = touched[alive[touched]]
        eb[touched] = fresh[touched]
    return order, comps


# --------------------------------------------------------------------------
# CSR (N x N) @ dense (N x K)


@njit(cache=True, nogil=True)
def csr_matmul_nb(indptr, indices, data, x):
    n = indptr.size - 1
    k = x.shape[1]
    out = np.zeros((n, k))
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            a = data[p]
            for c in range(k):
                out[i, c] += a * x[j, c]
    return out


def csr_matmul_np(indptr, indices, data, x):
    n = indptr.size - 1
    out = np.zeros((n, x.shape[1]))
    rows = np.flatnonzero(np.diff(indptr))
    if rows.size:
        prod = data[:, None] * x[indices]
        out[rows] = np.add.reduceat(prod, indptr[rows], axis=0)
    return out


if USE_NUMBA:
    brandes_edges = brandes_edges_nb
    girvan_newman_order = girvan_newman_order_nb
    csr_matmul = csr_matmul_nb
else:
    brandes_edges = brandes_edges_np
    girvan_newman_order = girvan_newman_order_np
    csr_matmul = csr_matmul_np
