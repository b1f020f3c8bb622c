"""Dense float64 tensors with reverse-mode gradients for the handful of ops the
model needs, plus initialization, Adam and a finite-difference checker.

Each op returns a new :class:`Tensor` holding a closure that pushes its
output gradient into its inputs. ``Tensor.backward`` runs those closures in
reverse topological order. Only inputs that (transitively) require gradients
receive them.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Callable, Sequence

import numpy as np


class ShapeError(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


class Tensor:
    __slots__ = ("values", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, values, requires_grad=False, name=None, _parents=(), _backward=None):
        v = np.array(values, dtype=np.float64, copy=True)
        if v.ndim == 0:
            v = v.reshape(1, 1)
        elif v.ndim == 1:
            v = v.reshape(1, -1)
        elif v.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got shape {v.shape}")
        self.values = v
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward
        self.name = name

    @classmethod
    def _wrap(cls, values, parents, backward):
        t = cls.__new__(cls)
        t.values = values
        t.grad = None
        t.requires_grad = any(p.requires_grad for p in parents)
        t._parents = parents if t.requires_grad else ()
        t._backward = backward if t.requires_grad else None
        t.name = None
        return t

    @property
    def shape(self):
        return self.values.shape

    @property
    def rows(self):
        return self.values.shape[0]

    @property
    def cols(self):
        return self.values.shape[1]

    def item(self) -> float:
        if self.values.size != 1:
            raise ShapeError("item() needs a 1x1 tensor")
        return float(self.values[0, 0])

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if not self.requires_grad:
            return
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def backward(self, grad=None):
        if grad is None:
            if self.values.size != 1:
                raise ShapeError("backward() without a seed needs a scalar output")
            grad = np.ones_like(self.values)
        order, seen = [], set()

        def visit(t):
            if id(t) in seen:
                return
            seen.add(id(t))
            for p in t._parents:
                visit(p)
            order.append(t)

        visit(self)
        self._accumulate(grad)
        for t in reversed(order):
            if t._backward is not None and t.grad is not None:
                t._backward(t.grad)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}({self.rows}x{self.cols}, requires_grad={self.requires_grad})"


def check_finite(t: Tensor, where: str = "") -> Tensor:
    if not np.all(np.isfinite(t.values)):
        raise NumericError(f"non-finite values{' in ' + where if where else ''}")
    return t


# --------------------------------------------------------------------------
# ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.cols != b.rows:
        raise ShapeError(f"matmul {a.shape} @ {b.shape}")

    def backward(g):
        if a.requires_grad:
            a._accumulate(g @ b.values.T)
        if b.requires_grad:
            b._accumulate(a.values.T @ g)

    return Tensor._wrap(a.values @ b.values, (a, b), backward)


def sparse_dense_matmul(p, x: Tensor) -> Tensor:
    """``p @ x`` for a :class:`~mscale_gcn.graph.CsrMatrix` ``p`` (a constant)."""
    if p.shape[1] != x.rows:
        raise ShapeError(f"sparse {p.shape} @ {x.shape}")

    def backward(g):
        x._accumulate(p.T.matmul(g))

    return Tensor._wrap(p.matmul(x.values), (x,), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.values > 0

    def backward(g):
        x._accumulate(g * mask)

    return Tensor._wrap(np.where(mask, x.values, 0.0), (x,), backward)


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """``x + b`` with ``b`` (1 x cols) broadcast over rows, or same shape as ``x``."""
    if b.cols != x.cols or b.rows not in (1, x.rows):
        raise ShapeError(f"bias {b.shape} for {x.shape}")

    def backward(g):
        x._accumulate(g)
        if b.requires_grad:
            b._accumulate(g.sum(axis=0, keepdims=True) if b.rows == 1 else g)

    return Tensor._wrap(x.values + b.values, (x, b), backward)


def concat_rows(parts: Sequence[Tensor]) -> Tensor:
    if not parts:
        raise ShapeError("nothing to concatenate")
    shape = parts[0].shape
    if any(p.shape != shape for p in parts):
        raise ShapeError(f"mismatched shapes {[p.shape for p in parts]}")
    n = shape[0]

    def backward(g):
        for k, p in enumerate(parts):
            p._accumulate(g[k * n:(k + 1) * n])

    return Tensor._wrap(np.concatenate([p.values for p in parts], axis=0), tuple(parts), backward)


def block_mean(x: Tensor, blocks: int) -> Tensor:
    """Average ``blocks`` stacked row blocks: row ``n`` of the result is the
    mean of rows ``n, n + N, ..., n + (blocks - 1) N``."""
    if blocks < 1 or x.rows % blocks:
        raise ShapeError(f"{x.rows} rows do not split into {blocks} blocks")
    n = x.rows // blocks
    stacked = x.values.reshape(blocks, n, x.cols)

    def backward(g):
        x._accumulate(np.tile(g / blocks, (blocks, 1)))

    return Tensor._wrap(stacked.mean(axis=0), (x,), backward)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: Tensor, labels, mask) -> Tensor:
    """Mean negative log-likelihood over the masked rows, as a 1x1 tensor."""
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    if labels.shape != (logits.rows,) or mask.shape != (logits.rows,):
        raise ShapeError("labels and mask need one entry per row")
    rows = np.flatnonzero(mask)
    if rows.size == 0:
        raise ValueError("empty mask")
    y = labels[rows]
    if y.min() < 0 or y.max() >= logits.cols:
        raise ValueError("label out of range")
    z = logits.values[rows]
    z = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(log_norm - z[np.arange(rows.size), y]))

    def backward(g):
        probs = np.exp(z - log_norm[:, None])
        probs[np.arange(rows.size), y] -= 1.0
        full = np.zeros_like(logits.values)
        full[rows] = probs * (g.item() / rows.size)
        logits._accumulate(full)

    return Tensor._wrap(np.array([[loss]]), (logits,), backward)


# --------------------------------------------------------------------------
# randomness and initialization


def make_rng(seed) -> np.random.Generator:
    """Accepts an int, a ``SeedSequence`` or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_seeds(seed, n: int) -> list[np.random.SeedSequence]:
    """``n`` independent child streams of ``seed``."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return ss.spawn(n)


def glorot_init(rows: int, cols: int, rng_seed, name=None) -> Tensor:
    if rows <= 0 or cols <= 0:
        raise ShapeError(f"zero dimension in {rows}x{cols}")
    bound = np.sqrt(6.0 / (rows + cols))
    vals = make_rng(rng_seed).uniform(-bound, bound, size=(rows, cols))
    return Tensor(vals, requires_grad=True, name=name)


# --------------------------------------------------------------------------
# Adam with an L2 term folded into the gradient


@dataclass
class AdamState:
    learning_rate: float = 0.01
    weight_decay: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)


def adam_step(params: Sequence[Tensor], state: AdamState, decay: Sequence[bool] | None = None) -> None:
    """One Adam update; ``decay[i]`` says whether ``params[i]`` gets weight decay.

    Gradients are consumed and cleared.
    """
    if decay is None:
        decay = [True] * len(params)
    if not state.first_moment:
        state.first_moment = [np.zeros_like(p.values) for p in params]
        state.second_moment = [np.zeros_like(p.values) for p in params]
    if len(state.first_moment) != len(params):
        raise ValueError("parameter list changed between steps")
    for p in params:
        if p.grad is None:
            raise ValueError(f"missing gradient for {p!r}")

    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    for p, m, v, wd in zip(params, state.first_moment, state.second_moment, decay):
        g = p.grad + state.weight_decay * p.values if wd else p.grad
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        p.values -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
        p.grad = None


# --------------------------------------------------------------------------
# gradient checking


def finite_difference_check(f: Callable[[Tensor], Tensor], x: Tensor, step: float = 1e-5,
                            floor: float = 1e-3) -> float:
    """Max over entries of ``|analytic - central| / max(|analytic|, |central|, floor)``.

    ``f`` must be pure and map ``x`` to a 1x1 tensor.
    """
    x.requires_grad = True
    x.grad = None
    f(x).backward()
    analytic = np.zeros_like(x.values) if x.grad is None else x.grad.copy()
    x.grad = None

    numeric = np.zeros_like(x.values)
    flat = x.values.reshape(-1)
    for k in range(flat.size):
        old = flat[k]
        flat[k] = old + step
        up = f(x).item()
        flat[k] = old - step
        down = f(x).item()
        flat[k] = old
        numeric.reshape(-1)[k] = (up - down) / (2.0 * step)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


# --------------------------------------------------------------------------
# serialization: rows, cols as little-endian u64 then row-major <f8 values

_SHAPE = struct.Struct("<QQ")


def write_tensor(fh: BinaryIO, t) -> None:
    arr = t.values if isinstance(t, Tensor) else np.asarray(t, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError("only 2-D tensors serialize")
    fh.write(_SHAPE.pack(*arr.shape))
    fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_tensor(fh: BinaryIO) -> Tensor:
    head = fh.read(_SHAPE.size)
    if len(head) != _SHAPE.size:
        raise EOFError("truncated tensor header")
    rows, cols = _SHAPE.unpack(head)
    body = fh.read(8 * rows * cols)
    if len(body) != 8 * rows * cols:
        raise EOFError("truncated tensor body")
    return Tensor(np.frombuffer(body, dtype="<f8").reshape(rows, cols))
