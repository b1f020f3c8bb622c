"""Girvan-Newman hierarchical decomposition and scale selection."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .graph import Graph, GraphError, connected_components

BASE = -1  # snapshot index alias for the undecomposed input graph


class SnapshotPolicy(str, enum.Enum):
    EVERY_REMOVAL = "every_removal"
    ON_COMPONENT_CHANGE = "on_component_change"


class ScaleRangeError(IndexError):
    pass


@dataclass(frozen=True)
class Snapshot:
    edges_remaining: int
    component_count: int
    removed_prefix_length: int

    @property
    def usable(self) -> bool:
        return self.edges_remaining > 0


@dataclass(frozen=True, eq=False)
class Dendrogram:
    base: Graph
    removal_order: np.ndarray  # edge ids into base.edges
    snapshots: tuple[Snapshot, ...]
    policy: SnapshotPolicy

    @property
    def n_usable(self) -> int:
        return sum(s.usable for s in self.snapshots)

    def removed_edges(self) -> np.ndarray:
        """Removed pairs, in removal order."""
        return self.base.edges[self.removal_order]

    def __eq__(self, other):
        if not isinstance(other, Dendrogram):
            return NotImplemented
        return (self.base == other.base and self.policy == other.policy
                and np.array_equal(self.removal_order, other.removal_order)
                and self.snapshots == other.snapshots)


@dataclass(frozen=True)
class ScaleSet:
    scales: tuple[Graph, ...]
    indices: tuple[int, ...]

    def __len__(self):
        return len(self.scales)


def edge_betweenness(g: Graph) -> dict[tuple[int, int], float]:
    """Shortest-path edge betweenness over unordered node pairs (not normalized)."""
    if g.n_edges == 0:
        return {}
    indptr, nbr, eid = g.arcs()
    alive = np.ones(g.n_edges, dtype=np.bool_)
    eb = kernels.brandes_edges(indptr, nbr, eid, alive, np.arange(g.n_nodes), g.n_edges)
    return {(int(i), int(j)): float(v) for (i, j), v in zip(g.edges, eb)}


def girvan_newman(g: Graph, snapshot_policy=SnapshotPolicy.EVERY_REMOVAL) -> Dendrogram:
    """Remove maximum-betweenness edges one at a time until none remain.

    Ties go to the lexicographically smallest edge. Betweenness is
    refreshed only inside the component(s) touched by the last removal.
    """
    policy = SnapshotPolicy(snapshot_policy)
    if g.n_edges == 0:
        raise GraphError("Girvan-Newman needs at least one edge")
    indptr, nbr, eid = g.arcs()
    n_comp, _ = connected_components(g)
    order, comps = kernels.girvan_newman_order(
        indptr, nbr, eid, g.edges, n_comp, kernels.TIE_RTOL)
    return Dendrogram(g, order, _snapshots(g.n_edges, n_comp, comps, policy), policy)


def _snapshots(m, start_components, comps, policy):
    snaps = []
    prev = start_components
    for step, c in enumerate(comps.tolist()):
        if policy is SnapshotPolicy.EVERY_REMOVAL or c != prev:
            snaps.append(Snapshot(m - step - 1, int(c), step + 1))
        prev = c
    return tuple(snaps)


def snapshot_graph(d: Dendrogram, index: int) -> Graph:
    """Base graph minus the removed-edge prefix of snapshot ``index``.

    ``index == BASE`` (-1) returns the original graph.
    """
    if index == BASE:
        return d.base
    if not 0 <= index < len(d.snapshots):
        raise ScaleRangeError(f"snapshot index {index} outside [0, {len(d.snapshots)})")
    return d.base.without(d.removal_order[: d.snapshots[index].removed_prefix_length])


def linear_indices(n_usable: int, count: int) -> list[int]:
    if count < 1:
        raise ScaleRangeError("need at least one scale")
    if count > n_usable:
        raise ScaleRangeError(f"{count} scales requested but only {n_usable} usable snapshots")
    if count == 1:
        return [0]
    return [int(round(k * (n_usable - 1) / (count - 1))) for k in range(count)]


def select_scales(d: Dendrogram, count: int) -> ScaleSet:
    """``count`` snapshots linearly spaced over the usable range."""
    return scales_at(d, linear_indices(d.n_usable, count))


def scales_at(d: Dendrogram, indices) -> ScaleSet:
    """Materialize explicit snapshot indices (``BASE`` allowed)."""
    indices = [int(i) for i in indices]
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise ScaleRangeError(f"scale indices must be strictly increasing: {indices}")
    graphs = []
    for i in indices:
        if i != BASE and (i >= d.n_usable or i < 0):
            raise ScaleRangeError(f"snapshot {i} is not usable (usable: 0..{d.n_usable - 1})")
        graphs.append(snapshot_graph(d, i))
    return ScaleSet(tuple(graphs), tuple(indices))


# --------------------------------------------------------------------------
# dendrogram file: "N M policy", M removal lines, then one
# "removed_prefix_length component_count" line per snapshot


def write_dendrogram(d: Dendrogram, path) -> None:
    lines = [f"{d.base.n_nodes} {d.base.n_edges} {d.policy.value}"]
    lines += [f"{i} {j}" for i, j in d.removed_edges().tolist()]
    lines += [f"{s.removed_prefix_length} {s.component_count}" for s in d.snapshots]
    Path(path).write_text("\n".join(lines) + "\n")


def read_dendrogram(path) -> Dendrogram:
    rows = Path(path).read_text().split("\n")
    try:
        n, m, policy = rows[0].split()
        n, m = int(n), int(m)
        removed = np.array([r.split() for r in rows[1:1 + m]], dtype=np.int64).reshape(m, 2)
        tail = [r.split() for r in rows[1 + m:] if r.strip()]
        snaps = tuple(Snapshot(m - int(p), int(c), int(p)) for p, c in tail)
    except ValueError as exc:
        raise GraphError(f"{path}: malformed dendrogram file ({exc})") from exc
    base = Graph(n, removed)
    lookup = {(int(i), int(j)): k for k, (i, j) in enumerate(base.edges)}
    order = np.array([lookup[tuple(sorted(map(int, r)))] for r in removed], dtype=np.int64)
    return Dendrogram(base, order, snaps, SnapshotPolicy(policy))
