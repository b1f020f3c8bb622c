"""Multiscale graph convolutional network over a Girvan-Newman decomposition."""

from ._accel import USE_NUMBA
from .data import LabeledDataset, corrupt_features, load_cora, make_masks
from .graph import (
    Graph, PropagationMatrix, build_adjacency, build_propagation, clustering_coefficient,
    connected_components, hierarchy_signature,
)
from .hier import (
    Dendrogram, ScaleSet, SnapshotPolicy, edge_betweenness, girvan_newman, scales_at,
    select_scales, snapshot_graph,
)
from .model import MultiscaleModel, TrainConfig, evaluate, train_two_stage

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA",
    "Dendrogram",
    "Graph",
    "LabeledDataset",
    "MultiscaleModel",
    "PropagationMatrix",
    "ScaleSet",
    "SnapshotPolicy",
    "TrainConfig",
    "build_adjacency",
    "build_propagation",
    "clustering_coefficient",
    "connected_components",
    "corrupt_features",
    "edge_betweenness",
    "evaluate",
    "girvan_newman",
    "hierarchy_signature",
    "load_cora",
    "make_masks",
    "scales_at",
    "select_scales",
    "snapshot_graph",
    "train_two_stage",
]
