"""Cora-format ingestion, train/test masks and training-set feature corruption."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .graph import Graph
from .numerics import make_rng

CORA_FEATURES = 1433
CORA_CLASSES = (
    "Case_Based",
    "Genetic_Algorithms",
    "Neural_Networks",
    "Probabilistic_Methods",
    "Reinforcement_Learning",
    "Rule_Learning",
    "Theory",
)


class DataError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    graph: Graph
    features: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    train_mask: np.ndarray = field(repr=False)
    test_mask: np.ndarray = field(repr=False)
    class_names: tuple[str, ...]
    paper_ids: tuple[str, ...] = field(default=(), repr=False)
    dropped_citations: int = 0
    citation_lines: int = 0

    def __post_init__(self):
        n = self.graph.n_nodes
        if self.features.shape[0] != n or self.labels.shape != (n,):
            raise DataError("features/labels do not match node count")
        if self.train_mask.shape != (n,) or self.test_mask.shape != (n,):
            raise DataError("masks do not match node count")
        if np.any(self.train_mask & self.test_mask):
            raise DataError("train and test masks overlap")
        for arr in (self.features, self.labels, self.train_mask, self.test_mask):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def digest(self) -> str:
        h = hashlib.sha256(self.graph.digest().encode())
        h.update(np.ascontiguousarray(self.features, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.labels, dtype="<i8").tobytes())
        h.update(self.train_mask.tobytes())
        h.update(self.test_mask.tobytes())
        h.update("\x00".join(self.class_names).encode())
        return h.hexdigest()

    def summary_line(self) -> str:
        """``N M F C |train| |test| sha`` reproducibility line."""
        return (f"{self.n_nodes} {self.graph.n_edges} {self.n_features} {self.n_classes} "
                f"{int(self.train_mask.sum())} {int(self.test_mask.sum())} {self.digest()[:16]}")

    def with_features(self, features) -> LabeledDataset:
        return replace(self, features=np.array(features, dtype=np.float64))

    def cap_features(self, limit: int) -> LabeledDataset:
        """Keep only the first ``limit`` feature columns (smoke-run budget control)."""
        return self.with_features(self.features[:, :limit])

    def row_normalized(self) -> LabeledDataset:
        sums = self.features.sum(axis=1, keepdims=True)
        return self.with_features(self.features / np.where(sums > 0, sums, 1.0))


def load_cora(content_path, cites_path, n_features: int | None = CORA_FEATURES,
              class_names=CORA_CLASSES) -> LabeledDataset:
    """Parse ``.content`` / ``.cites`` files.

    Nodes are indexed by first appearance in the content file. Citations are
    undirected and deduplicated; self-citations produce no edge and citations
    naming unknown papers are dropped (counted in ``dropped_citations``).
    Class indices follow sorted class-name order. Pass ``n_features=None`` /
    ``class_names=None`` to infer both from the file instead of validating.
    """
    content_path, cites_path = Path(content_path), Path(cites_path)
    rows = [ln for ln in content_path.read_text().splitlines() if ln.strip()]
    if not rows:
        raise DataError(f"{content_path}: empty file")
    width = None if n_features is None else n_features + 2

    ids, feats, raw_labels = [], [], []
    index = {}
    for lineno, line in enumerate(rows, 1):
        cols = line.split("\t") if "\t" in line else line.split()
        if width is None:
            width = len(cols)
            if width < 3:
                raise DataError(f"{content_path}:{lineno}: too few columns")
        if len(cols) != width:
            raise DataError(f"{content_path}:{lineno}: {len(cols)} columns, expected {width}")
        pid = cols[0]
        if pid in index:
            raise DataError(f"{content_path}:{lineno}: duplicate paper id {pid}")
        index[pid] = len(ids)
        ids.append(pid)
        feats.append(cols[1:-1])
        raw_labels.append(cols[-1])

    try:
        x = np.array(feats, dtype=np.float64)
    except ValueError as exc:
        raise DataError(f"{content_path}: non-numeric feature ({exc})") from exc
    if not np.all((x == 0) | (x == 1)):
        raise DataError(f"{content_path}: features must be 0/1")

    if class_names is None:
        names = tuple(sorted(set(raw_labels)))
    else:
        names = tuple(sorted(class_names))
        unknown = sorted(set(raw_labels) - set(names))
        if unknown:
            raise DataError(f"{content_path}: unknown class label(s) {unknown}")
    lookup = {name: k for k, name in enumerate(names)}
    labels = np.array([lookup[c] for c in raw_labels], dtype=np.int64)

    cite_rows = [ln for ln in Path(cites_path).read_text().splitlines() if ln.strip()]
    if not cite_rows:
        raise DataError(f"{cites_path}: empty file")
    pairs, dropped = [], 0
    for lineno, line in enumerate(cite_rows, 1):
        parts = line.split()
        if len(parts) != 2:
            raise DataError(f"{cites_path}:{lineno}: expected 2 columns")
        a, b = index.get(parts[0]), index.get(parts[1])
        if a is None or b is None:
            dropped += 1
            continue
        pairs.append((a, b))
    graph = Graph.from_pairs(len(ids), pairs, dedupe=True, drop_self_loops=True)

    n = len(ids)
    empty = np.zeros(n, dtype=bool)
    return LabeledDataset(graph, x, labels, empty, empty.copy(), names, tuple(ids),
                          dropped, len(cite_rows))


def make_masks(ds: LabeledDataset, train_per_class: int = 20, seed=0,
               test_size: int = 1000) -> LabeledDataset:
    """Seeded per-class training draw plus a disjoint random test set."""
    rng = make_rng(seed)
    train = np.zeros(ds.n_nodes, dtype=bool)
    for c in range(ds.n_classes):
        members = np.flatnonzero(ds.labels == c)
        if members.size < train_per_class:
            raise DataError(f"class {ds.class_names[c]!r} has {members.size} < {train_per_class} nodes")
        train[rng.choice(members, size=train_per_class, replace=False)] = True
    rest = np.flatnonzero(~train)
    if test_size > rest.size:
        raise DataError(f"test set of {test_size} needs more than the {rest.size} non-training nodes")
    test = np.zeros(ds.n_nodes, dtype=bool)
    test[rng.choice(rest, size=test_size, replace=False)] = True
    return replace(ds, train_mask=train, test_mask=test)


def corrupt_features(ds: LabeledDataset, p: float, seed=0) -> LabeledDataset:
    """Replace the features of ``round(p * |train|)`` training nodes with
    uniform random binary vectors. The input dataset is left untouched."""
    if not 0.0 <= p <= 1.0:
        raise DataError(f"noise level {p} outside [0, 1]")
    rng = make_rng(seed)
    train = np.flatnonzero(ds.train_mask)
    k = round(p * train.size)
    x = np.array(ds.features, copy=True)
    if k:
        chosen = np.sort(rng.choice(train, size=k, replace=False))
        x[chosen] = rng.integers(0, 2, size=(k, ds.n_features)).astype(np.float64)
    return ds.with_features(x)


# --------------------------------------------------------------------------
# writing Cora-format files (fixtures, dataset round-trips)


def write_cora(ds: LabeledDataset, content_path, cites_path) -> None:
    ids = ds.paper_ids or tuple(str(i) for i in range(ds.n_nodes))
    with open(content_path, "w") as fh:
        for i in range(ds.n_nodes):
            words = "\t".join(str(int(v)) for v in ds.features[i])
            fh.write(f"{ids[i]}\t{words}\t{ds.class_names[ds.labels[i]]}\n")
    with open(cites_path, "w") as fh:
        for a, b in ds.graph.edges.tolist():
            fh.write(f"{ids[a]}\t{ids[b]}\n")
