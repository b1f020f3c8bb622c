"""Undirected graph, the normalized propagation matrix and hierarchy diagnostics."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected, unweighted graph on nodes ``0 .. n_nodes-1``.

    ``edges`` is an ``(M, 2)`` int64 array of canonical pairs ``i < j``
    sorted lexicographically; the row index of a pair is its edge id.
    """

    n_nodes: int
    edges: np.ndarray = field(repr=False)

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if self.n_nodes < 0:
            raise GraphError("negative node count")
        if edges.size:
            if edges.min() < 0 or edges.max() >= self.n_nodes:
                raise GraphError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise GraphError("self-loops are not allowed")
        edges = np.sort(edges, axis=1)
        edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
        if edges.shape[0] > 1 and np.any(np.all(edges[1:] == edges[:-1], axis=1)):
            raise GraphError("duplicate edge")
        edges.setflags(write=False)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_pairs(cls, n_nodes, pairs, *, dedupe=False, drop_self_loops=False):
        """Build from any iterable of ``(i, j)``; optionally clean it first."""
        arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        if drop_self_loops:
            arr = arr[arr[:, 0] != arr[:, 1]]
        if dedupe:
            arr = np.unique(np.sort(arr, axis=1), axis=0)
        return cls(n_nodes, arr)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_nodes)

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(i), int(j)) for i, j in self.edges}

    def without(self, removed) -> Graph:
        """Copy of this graph minus the given edge ids."""
        keep = np.ones(self.n_edges, dtype=bool)
        keep[np.asarray(removed, dtype=np.int64)] = False
        return Graph(self.n_nodes, self.edges[keep])

    def arcs(self):
        """Symmetric CSR ``(indptr, nbr, eid)``, see :mod:`mscale_gcn.kernels`."""
        return kernels.csr_arcs(self.n_nodes, self.edges)

    def neighbors(self) -> list[set[int]]:
        nb = [set() for _ in range(self.n_nodes)]
        for i, j in self.edges.tolist():
            nb[i].add(j)
            nb[j].add(i)
        return nb

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.int64(self.n_nodes).tobytes())
        h.update(np.ascontiguousarray(self.edges).astype("<i8").tobytes())
        return h.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n_nodes == other.n_nodes and np.array_equal(self.edges, other.edges)

    def __hash__(self):
        return hash(self.digest())


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Read-only compressed sparse rows with a numba/numpy ``@ dense`` product."""

    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)
    data: np.ndarray = field(repr=False)
    n_cols: int

    @classmethod
    def from_dense(cls, dense) -> CsrMatrix:
        dense = np.asarray(dense, dtype=np.float64)
        rows, cols = np.nonzero(dense)
        ptr = np.zeros(dense.shape[0] + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=dense.shape[0]), out=ptr[1:])
        return cls(ptr, cols.astype(np.int64), dense[rows, cols], dense.shape[1])

    @property
    def shape(self):
        return (self.indptr.size - 1, self.n_cols)

    @property
    def nnz(self) -> int:
        return int(self.data.size)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        out[rows, self.indices] = self.data
        return out

    @cached_property
    def T(self) -> CsrMatrix:
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        order = np.lexsort((rows, self.indices))
        ptr = np.zeros(self.n_cols + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.indices, minlength=self.n_cols), out=ptr[1:])
        return CsrMatrix(ptr, rows[order], self.data[order], self.shape[0])

    def matmul(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] != self.n_cols:
            raise ValueError(f"cannot multiply {self.shape} by {x.shape}")
        return kernels.csr_matmul(self.indptr, self.indices, self.data, x)


@dataclass(frozen=True, eq=False)
class PropagationMatrix(CsrMatrix):
    """``D^-1/2 (A + I) D^-1/2`` as CSR. Symmetric, so it is its own transpose."""

    source_graph_hash: str = ""

    @property
    def T(self) -> PropagationMatrix:
        return self


def build_adjacency(g: Graph) -> np.ndarray:
    a = np.zeros((g.n_nodes, g.n_nodes))
    if g.n_edges:
        a[g.edges[:, 0], g.edges[:, 1]] = 1.0
        a[g.edges[:, 1], g.edges[:, 0]] = 1.0
    return a


def build_propagation(g: Graph) -> PropagationMatrix:
    n = g.n_nodes
    indptr, nbr, _ = g.arcs()
    deg_hat = np.diff(indptr).astype(np.float64) + 1.0
    # splice the self-loop into each sorted neighbour row
    rows = np.concatenate([np.repeat(np.arange(n), np.diff(indptr)), np.arange(n)])
    cols = np.concatenate([nbr, np.arange(n)])
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    data = 1.0 / np.sqrt(deg_hat[rows] * deg_hat[cols])
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=ptr[1:])
    for arr in (ptr, cols, data):
        arr.setflags(write=False)
    return PropagationMatrix(ptr, cols.astype(np.int64), data, n, g.digest())


def clustering_coefficient(g: Graph, node: int, neighbors=None) -> float:
    if not 0 <= node < g.n_nodes:
        raise IndexError(node)
    nb = neighbors if neighbors is not None else g.neighbors()
    mine = nb[node]
    k = len(mine)
    if k < 2:
        return 0.0
    links = sum(len(nb[u] & mine) for u in mine) // 2
    return 2.0 * links / (k * (k - 1))


def hierarchy_signature(g: Graph) -> list[tuple[int, float]]:
    """Mean clustering coefficient per degree, for degrees >= 2.

    In a hierarchical network this falls off roughly as ``1/k``.
    """
    nb = g.neighbors()
    by_degree: dict[int, list[float]] = {}
    for v in range(g.n_nodes):
        k = len(nb[v])
        if k >= 2:
            by_degree.setdefault(k, []).append(clustering_coefficient(g, v, nb))
    return [(k, float(np.mean(cs))) for k, cs in sorted(by_degree.items())]


def connected_components(g: Graph) -> tuple[int, np.ndarray]:
    """Component count and per-node labels; labels follow the lowest node index."""
    labels = np.full(g.n_nodes, -1, dtype=np.int64)
    nb = g.neighbors()
    count = 0
    for start in range(g.n_nodes):
        if labels[start] >= 0:
            continue
        labels[start] = count
        stack = [start]
        while stack:
            v = stack.pop()
            for w in nb[v]:
                if labels[w] < 0:
                    labels[w] = count
                    stack.append(w)
        count += 1
    return count, labels


# --------------------------------------------------------------------------
# edge-list text format


def read_edge_list(path, n_nodes: int | None = None) -> Graph:
    """Read ``i j`` lines (0-based, ``#`` comments). Node count defaults to max index + 1."""
    pairs = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"{path}:{lineno}: expected 'i j', got {raw!r}")
        pairs.append((int(parts[0]), int(parts[1])))
    if n_nodes is None:
        n_nodes = 1 + max((max(p) for p in pairs), default=-1)
    return Graph.from_pairs(n_nodes, pairs)


def write_edge_list(g: Graph, path, header: str | None = None) -> None:
    lines = [f"# {header}"] if header else []
    lines += [f"{i} {j}" for i, j in g.edges.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")
