"""Multiscale GCN: one convolution stack per scale, row concatenation, and a
fully connected head, trained in two stages."""

from __future__ import annotations

import hashlib
import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .graph import CsrMatrix, PropagationMatrix, build_propagation
from .numerics import (
    AdamState, ShapeError, Tensor, adam_step, add_bias, block_mean,
    check_finite, concat_rows, glorot_init, make_rng, matmul, relu,
    softmax_cross_entropy, sparse_dense_matmul, spawn_seeds,
)

HEAD_KINDS = ("mlp", "literal")
SPARSE_FEATURE_DENSITY = 0.25


def feature_operand(features):
    """Features as CSR when sparse enough (bag-of-words), else a dense tensor."""
    if isinstance(features, (Tensor, CsrMatrix)):
        return features
    x = np.asarray(features, dtype=np.float64)
    if x.size and np.count_nonzero(x) <= SPARSE_FEATURE_DENSITY * x.size:
        return CsrMatrix.from_dense(x)
    return Tensor(x)


@dataclass(frozen=True)
class TrainConfig:
    depth: int = 2
    fc_hidden: int = 30
    conv_epochs: int = 300
    fc_epochs: int = 10
    fc_batch_size: int = 32  # training nodes per head update; 0 means full batch
    lr: float = 0.01
    weight_decay: float = 5e-4
    head: str = "mlp"
    output_relu: bool = True  # sigma on the last conv layer before the head
    jobs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.conv_epochs < 1 or self.fc_epochs < 1:
            raise ValueError("epoch counts must be >= 1")
        if self.head not in HEAD_KINDS:
            raise ValueError(f"head must be one of {HEAD_KINDS}")
        if self.head == "mlp" and self.fc_hidden < 1:
            raise ValueError("fc_hidden must be >= 1")
        if self.fc_batch_size < 0:
            raise ValueError("fc_batch_size must be >= 0")

    def digest(self) -> str:
        blob = json.dumps({k: v for k, v in asdict(self).items() if k != "jobs"}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def layer_widths(n_features: int, n_classes: int, depth: int) -> list[int]:
    """Widths ``[F, ..., C]`` where each interior width is the mean of its
    neighbours, i.e. evenly spaced between F and C, rounded."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    interior = np.linspace(n_features, n_classes, depth + 1)
    return [n_features] + [int(round(w)) for w in interior[1:-1]] + [n_classes]


class ScaleGCN:
    """Convolution stack ``H <- sigma(P H W)`` on one scale's graph."""

    def __init__(self, propagation: PropagationMatrix, widths, seed):
        self.propagation = propagation
        self.widths = list(widths)
        streams = spawn_seeds(seed, len(self.widths) - 1)
        self.weights = [glorot_init(a, b, s, name=f"W{q}")
                        for q, (a, b, s) in enumerate(zip(self.widths, self.widths[1:], streams))]

    @property
    def depth(self) -> int:
        return len(self.weights)

    def forward(self, x) -> Tensor:
        """Pre-activation output of the last layer (N x C).

        ``x`` is a dense :class:`Tensor` or a :class:`CsrMatrix` of features.
        """
        if x.shape != (self.propagation.shape[0], self.widths[0]):
            raise ShapeError(f"features {x.shape} do not fit scale widths {self.widths}")
        h = x
        for q, w in enumerate(self.weights):
            # P (H W) == (P H) W; projecting first keeps the sparse product narrow
            hw = sparse_dense_matmul(h, w) if isinstance(h, CsrMatrix) else matmul(h, w)
            z = sparse_dense_matmul(self.propagation, hw)
            h = relu(z) if q < self.depth - 1 else z
        return h


def scale_forward(s: ScaleGCN, x, output_relu: bool = True) -> Tensor:
    z = s.forward(x)
    return relu(z) if output_relu else z


class FCHead:
    """Row-wise ``relu(r W1 + b1) W2 + b2``, averaged over the scales of each node."""

    def __init__(self, n_classes: int, hidden: int, seed):
        s1, s2 = spawn_seeds(seed, 2)
        self.w1 = glorot_init(n_classes, hidden, s1, name="fc_W1")
        self.b1 = Tensor(np.zeros((1, hidden)), requires_grad=True, name="fc_b1")
        self.w2 = glorot_init(hidden, n_classes, s2, name="fc_W2")
        self.b2 = Tensor(np.zeros((1, n_classes)), requires_grad=True, name="fc_b2")

    @property
    def params(self):
        return [self.w1, self.b1, self.w2, self.b2]

    @property
    def decay(self):
        return [True, False, True, False]


class LiteralHead:
    """The dense head ``W H + b`` with ``W`` of shape N x (N L). Small graphs only."""

    def __init__(self, n_nodes: int, n_scales: int, n_classes: int, seed):
        self.w = glorot_init(n_nodes, n_nodes * n_scales, seed, name="fc_W")
        self.b = Tensor(np.zeros((1, n_classes)), requires_grad=True, name="fc_b")

    @property
    def params(self):
        return [self.w, self.b]

    @property
    def decay(self):
        return [True, False]


def concat_scales(outputs) -> Tensor:
    """Stack per-scale N x C outputs into (N L) x C; row ``n + l N`` is scale l, node n."""
    return concat_rows(list(outputs))


def head_forward(head, concat: Tensor, n_scales: int) -> Tensor:
    if concat.rows % n_scales:
        raise ShapeError(f"{concat.rows} rows not divisible by {n_scales} scales")
    if isinstance(head, LiteralHead):
        return add_bias(matmul(head.w, concat), head.b)
    if concat.cols != head.w1.rows:
        raise ShapeError(f"head expects {head.w1.rows} columns, got {concat.cols}")
    hidden = relu(add_bias(matmul(concat, head.w1), head.b1))
    return block_mean(add_bias(matmul(hidden, head.w2), head.b2), n_scales)


@dataclass
class MultiscaleModel:
    scales: list[ScaleGCN]
    head: FCHead | LiteralHead
    n_classes: int
    n_nodes: int
    config: TrainConfig

    @classmethod
    def build(cls, graphs, n_features: int, n_classes: int, config: TrainConfig) -> MultiscaleModel:
        graphs = list(graphs)
        if not graphs:
            raise ValueError("need at least one scale")
        n = graphs[0].n_nodes
        if any(g.n_nodes != n for g in graphs):
            raise ShapeError("all scales must share the node set")
        if any(g.n_edges == 0 for g in graphs):
            raise ValueError("a scale graph has no edges")
        *scale_seeds, head_seed = spawn_seeds(config.seed, len(graphs) + 1)
        widths = layer_widths(n_features, n_classes, config.depth)
        scales = [ScaleGCN(build_propagation(g), widths, s) for g, s in zip(graphs, scale_seeds)]
        if config.head == "literal":
            head = LiteralHead(n, len(graphs), n_classes, head_seed)
        else:
            head = FCHead(n_classes, config.fc_hidden, head_seed)
        return cls(scales, head, n_classes, n, config)

    @property
    def n_scales(self) -> int:
        return len(self.scales)

    def scale_outputs(self, x) -> list[Tensor]:
        return [scale_forward(s, x, self.config.output_relu) for s in self.scales]

    def logits(self, x) -> Tensor:
        x = feature_operand(x)
        outs = [Tensor(o.values) for o in self.scale_outputs(x)]  # frozen
        return head_forward(self.head, concat_scales(outs), self.n_scales)

    def state(self) -> dict[str, Tensor]:
        out = {}
        for k, s in enumerate(self.scales):
            for q, w in enumerate(s.weights):
                out[f"scale{k}.W{q}"] = w
        for p in self.head.params:
            out[p.name] = p
        return out


@dataclass
class TrainTrace:
    scale_losses: list[list[float]] = field(default_factory=list)
    head_losses: list[float] = field(default_factory=list)


def _train_scale(s: ScaleGCN, x, data, cfg: TrainConfig) -> list[float]:
    state = AdamState(learning_rate=cfg.lr, weight_decay=cfg.weight_decay)
    losses = []
    for _ in range(cfg.conv_epochs):
        # stage-1 objective uses the pre-activation logits of the last layer
        loss = softmax_cross_entropy(s.forward(x), data.labels, data.train_mask)
        check_finite(loss, "scale loss")
        loss.backward()
        adam_step(s.weights, state)
        losses.append(loss.item())
    return losses


def _head_batches(train_rows: np.ndarray, n_nodes: int, batch_size: int, rng):
    """Masks for one stage-2 epoch: shuffled training nodes, ``batch_size`` at a time."""
    if batch_size == 0 or batch_size >= train_rows.size:
        order, batch_size = train_rows, train_rows.size
    else:
        order = rng.permutation(train_rows)
    for start in range(0, order.size, batch_size):
        mask = np.zeros(n_nodes, dtype=bool)
        mask[order[start:start + batch_size]] = True
        yield mask


def train_two_stage(model: MultiscaleModel, data, cfg: TrainConfig | None = None) -> TrainTrace:
    """Stage 1 trains each scale alone, full batch, and freezes it. Stage 2
    trains the head on the concatenated frozen outputs, one Adam update per
    minibatch of training nodes (all L rows of a node stay together). Both
    stages see the training mask only.

    ``trace.head_losses`` holds the mean minibatch loss of each epoch.
    """
    cfg = cfg or model.config
    if not np.any(data.train_mask):
        raise ValueError("empty training mask")
    x = feature_operand(data.features)
    trace = TrainTrace()

    if cfg.jobs > 1 and model.n_scales > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            trace.scale_losses = list(pool.map(lambda s: _train_scale(s, x, data, cfg), model.scales))
    else:
        trace.scale_losses = [_train_scale(s, x, data, cfg) for s in model.scales]

    for s in model.scales:
        for w in s.weights:
            w.requires_grad = False

    concat = concat_scales([Tensor(o.values) for o in model.scale_outputs(x)])
    state = AdamState(learning_rate=cfg.lr, weight_decay=cfg.weight_decay)
    # streams 0..L went to the weight initializers in MultiscaleModel.build
    rng = make_rng(spawn_seeds(cfg.seed, model.n_scales + 2)[-1])
    train_rows = np.flatnonzero(data.train_mask)
    for _ in range(cfg.fc_epochs):
        losses = []
        for mask in _head_batches(train_rows, model.n_nodes, cfg.fc_batch_size, rng):
            loss = softmax_cross_entropy(head_forward(model.head, concat, model.n_scales),
                                         data.labels, mask)
            check_finite(loss, "head loss")
            loss.backward()
            adam_step(model.head.params, state, model.head.decay)
            losses.append(loss.item())
        trace.head_losses.append(float(np.mean(losses)))
    return trace


def predict(model: MultiscaleModel, features) -> np.ndarray:
    return np.argmax(model.logits(features).values, axis=1)


def accuracy(logits: np.ndarray, labels, mask) -> float:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty evaluation mask")
    pred = np.argmax(logits[mask], axis=1)
    return float(np.mean(pred == np.asarray(labels)[mask]))


def evaluate(model: MultiscaleModel, data, mask) -> float:
    return accuracy(model.logits(data.features).values, data.labels, mask)


# --------------------------------------------------------------------------
# checkpoints: magic, u64 header length, JSON header, then tensors

_MAGIC = b"MSGCNCK1"


def save_checkpoint(model: MultiscaleModel, path) -> None:
    from .numerics import write_tensor

    tensors = model.state()
    header = json.dumps({
        "config": asdict(model.config),
        "config_digest": model.config.digest(),
        "graphs": [s.propagation.source_graph_hash for s in model.scales],
        "tensors": list(tensors),
    }, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for t in tensors.values():
            write_tensor(fh, t)


def load_checkpoint(path, graphs) -> MultiscaleModel:
    """Rebuild a trained model; ``graphs`` must be the scale graphs it was trained on."""
    from .numerics import read_tensor

    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path}: not a checkpoint")
        (size,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(size))
        tensors = {name: read_tensor(fh) for name in header["tensors"]}
    cfg = TrainConfig(**header["config"])
    graphs = list(graphs)
    if [g.digest() for g in graphs] != header["graphs"]:
        raise ValueError("scale graphs do not match the checkpoint")
    w0 = tensors["scale0.W0"]
    n_classes = tensors[f"scale0.W{cfg.depth - 1}"].cols
    model = MultiscaleModel.build(graphs, w0.rows, n_classes, cfg)
    for name, t in model.state().items():
        if t.shape != tensors[name].shape:
            raise ShapeError(f"{name}: checkpoint shape {tensors[name].shape} != {t.shape}")
        t.values[...] = tensors[name].values
    return model
