"""Planted-partition citation graphs in the Cora layout, for demos and tests."""

import numpy as np

from .data import LabeledDataset
from .graph import Graph
from .numerics import make_rng


def planted_citations(n_nodes=300, n_classes=3, n_features=60, mean_degree=4.0,
                      p_within=0.85, topic_rate=0.25, background_rate=0.03,
                      seed=0) -> LabeledDataset:
    """Class-homophilous random graph with class-topical binary features.

    Each node draws about ``mean_degree / 2`` partners, a fraction
    ``p_within`` of them from its own class. Feature block ``c`` (an equal
    slice of the columns) switches on at ``topic_rate`` for class ``c`` and at
    ``background_rate`` everywhere else.
    """
    rng = make_rng(seed)
    labels = np.sort(rng.integers(0, n_classes, size=n_nodes))
    members = [np.flatnonzero(labels == c) for c in range(n_classes)]
    pairs = set()
    for v in range(n_nodes):
        for _ in range(rng.poisson(mean_degree / 2)):
            pool = members[labels[v]] if rng.random() < p_within else np.arange(n_nodes)
            w = int(rng.choice(pool))
            if w != v:
                pairs.add((min(v, w), max(v, w)))
    graph = Graph(n_nodes, np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2))

    block = np.arange(n_features) * n_classes // n_features
    rates = np.where(block[None, :] == labels[:, None], topic_rate, background_rate)
    x = (rng.random((n_nodes, n_features)) < rates).astype(np.float64)

    names = tuple(f"class_{c}" for c in range(n_classes))
    empty = np.zeros(n_nodes, dtype=bool)
    return LabeledDataset(graph, x, labels.astype(np.int64), empty, empty.copy(), names,
                          tuple(f"p{v}" for v in range(n_nodes)))
