"""Dense float64 tensors with tape-based reverse-mode differentiation.

Every operation records its inputs and a VJP closure on the output tensor
while it executes (define-by-run). `backward` walks the recorded graph in
reverse execution order and returns accumulated gradients keyed by node id.
numpy supplies the dense kernels; the differentiation rules live here.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import DimensionError, NumericError

_NODE_IDS = itertools.count(1)

# Additive mask value for attention: large enough to zero the softmax weight,
# small enough that exp() stays exactly representable.
NEG_INF = -1e9


class Tensor:
    """Immutable dense array participating in the differentiation graph.

    Constants (requires_grad False and no differentiable inputs) carry no
    node id and are never traversed by the backward pass.
    """

    __slots__ = ("data", "requires_grad", "node_id", "_parents", "_vjp")

    def __init__(self, data, requires_grad=False, _parents=(), _vjp=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self._parents = _parents
        self._vjp = _vjp
        self.node_id = next(_NODE_IDS) if self.requires_grad else None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, _as_tensor(other))

    def __radd__(self, other):
        return add(_as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, _as_tensor(other))

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, other)
        return mul(self, _as_tensor(other))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, _as_tensor(other))


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, vjp) -> Tensor:
    """Record an op output; constant inputs produce a constant output."""
    tracked = tuple(p for p in parents if p.requires_grad)
    if not tracked:
        return Tensor(data)
    return Tensor(data, requires_grad=True, _parents=parents, _vjp=vjp)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient back down to the shape numpy broadcast it from."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class GradientTape:
    """Reverse-execution-order view of the graph reachable from a root.

    Node ids increase monotonically with creation, so sorting the reachable
    tensors by id descending visits every node after all of its consumers.
    """

    def __init__(self, root: Tensor):
        nodes = {}
        stack = [root]
        while stack:
            t = stack.pop()
            if t.node_id in nodes:
                continue
            nodes[t.node_id] = t
            for p in t._parents:
                if p.requires_grad and p.node_id not in nodes:
                    stack.append(p)
        self.ordered = sorted(nodes.values(), key=lambda t: t.node_id, reverse=True)
        self.grads: dict[int, np.ndarray] = {}

    def accumulate(self, root: Tensor, seed: np.ndarray) -> dict[int, np.ndarray]:
        self.grads = {root.node_id: seed}
        for t in self.ordered:
            g = self.grads.get(t.node_id)
            if g is None or t._vjp is None:
                continue
            for parent, pg in zip(t._parents, t._vjp(g)):
                if pg is None or not parent.requires_grad:
                    continue
                acc = self.grads.get(parent.node_id)
                self.grads[parent.node_id] = pg if acc is None else acc + pg
        return self.grads


def backward(loss: Tensor) -> dict[int, Tensor]:
    """Gradients of a scalar loss for every requires_grad tensor it reaches.

    Keys are node ids; tensors absent from the map received zero gradient.
    Deterministic: the same graph always yields bit-identical results.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    if not loss.requires_grad:
        return {}
    tape = GradientTape(loss)
    grads = tape.accumulate(loss, np.ones_like(loss.data))
    return {nid: Tensor(g) for nid, g in grads.items()}


def detach(x: Tensor) -> Tensor:
    """Value-identical constant excluded from gradient flow."""
    return Tensor(x.data.copy())


def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return _make(data, (a, b), vjp)


def sub(a: Tensor, b: Tensor) -> Tensor:
    data = a.data - b.data

    def vjp(g):
        return _unbroadcast(g, a.data.shape), -_unbroadcast(g, b.data.shape)

    return _make(data, (a, b), vjp)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise (Hadamard) product with numpy broadcasting."""
    data = a.data * b.data
    ad, bd = a.data, b.data

    def vjp(g):
        return _unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)

    return _make(data, (a, b), vjp)


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def vjp(g):
        return (g * c,)

    return _make(a.data * c, (a,), vjp)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data

    def vjp(g):
        return g @ bd.T, ad.T @ g

    return _make(ad @ bd, (a, b), vjp)


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise DimensionError(f"transpose expects a matrix, got shape {a.shape}")

    def vjp(g):
        return (g.T,)

    return _make(a.data.T, (a,), vjp)


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)

    def vjp(g):
        return (g * out,)

    return _make(out, (a,), vjp)


def log(a: Tensor) -> Tensor:
    ad = a.data

    def vjp(g):
        return (g / ad,)

    return _make(np.log(ad), (a,), vjp)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def vjp(g):
        return (g * (1.0 - out * out),)

    return _make(out, (a,), vjp)


def tsum(a: Tensor, axis: int | None = None) -> Tensor:
    shape = a.data.shape

    def vjp(g):
        if axis is None:
            return (np.broadcast_to(g, shape).copy(),)
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return _make(a.data.sum(axis=axis), (a,), vjp)


def mean(a: Tensor) -> Tensor:
    return scale(tsum(a), 1.0 / a.data.size)


def softmax_rows(x: Tensor) -> Tensor:
    """Row-wise softmax with max subtraction; rows sum to 1."""
    if x.ndim != 2:
        raise DimensionError(f"softmax_rows expects a matrix, got shape {x.shape}")
    if np.isnan(x.data).any():
        raise NumericError("softmax_rows received NaN input")
    z = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=1, keepdims=True)

    def vjp(g):
        # d softmax: s * (g - sum(g * s))
        dot = (g * out).sum(axis=1, keepdims=True)
        return (out * (g - dot),)

    return _make(out, (x,), vjp)


def log_softmax_rows(x: Tensor) -> Tensor:
    if x.ndim != 2:
        raise DimensionError(f"log_softmax_rows expects a matrix, got shape {x.shape}")
    if np.isnan(x.data).any():
        raise NumericError("log_softmax_rows received NaN input")
    z = x.data - x.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True))
    out = z - lse
    sm = np.exp(out)

    def vjp(g):
        return (g - sm * g.sum(axis=1, keepdims=True),)

    return _make(out, (x,), vjp)


def max_pool_rows(x: Tensor, row_mask: np.ndarray | None = None) -> Tensor:
    """Columnwise maximum over rows; ties route gradient to the lowest index.

    `row_mask` excludes rows (e.g. padding) from the pool; at least one row
    must stay eligible.
    """
    if x.ndim != 2 or x.shape[0] < 1:
        raise DimensionError(f"max_pool_rows needs a non-empty matrix, got shape {x.shape}")
    data = x.data
    if row_mask is not None:
        row_mask = np.asarray(row_mask, dtype=bool)
        if not row_mask.any():
            raise DimensionError("max_pool_rows: every row is masked out")
        data = np.where(row_mask[:, None], data, -np.inf)
    idx = data.argmax(axis=0)
    out = data[idx, np.arange(data.shape[1])]
    shape = x.data.shape

    def vjp(g):
        gx = np.zeros(shape)
        gx[idx, np.arange(shape[1])] = g
        return (gx,)

    return _make(out, (x,), vjp)


def embedding_lookup(table: Tensor, ids) -> Tensor:
    """Gather rows of `table`; gradient scatter-adds into the gathered rows."""
    ids = np.asarray(ids, dtype=np.intp)
    if ids.size and ids.max() >= table.shape[0]:
        raise IndexError(f"token id {int(ids.max())} >= table size {table.shape[0]}")
    if ids.size and ids.min() < 0:
        raise IndexError("negative token id")
    shape = table.data.shape

    def vjp(g):
        gt = np.zeros(shape)
        np.add.at(gt, ids, g)
        return (gt,)

    return _make(table.data[ids], (table,), vjp)


def concat_rows(parts) -> Tensor:
    """Stack tensors as rows; rank-1 inputs count as single rows."""
    parts = list(parts)
    if not parts:
        raise DimensionError("concat_rows needs at least one tensor")
    blocks = [p.data if p.ndim == 2 else p.data[None, :] for p in parts]
    counts = [b.shape[0] for b in blocks]
    offsets = np.cumsum([0] + counts)

    def vjp(g):
        grads = []
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            block = g[lo:hi]
            grads.append(block if p.ndim == 2 else block[0])
        return tuple(grads)

    return _make(np.concatenate(blocks, axis=0), tuple(parts), vjp)


def concat_cols(parts) -> Tensor:
    parts = list(parts)
    if not parts:
        raise DimensionError("concat_cols needs at least one tensor")
    widths = [p.shape[1] for p in parts]
    offsets = np.cumsum([0] + widths)

    def vjp(g):
        return tuple(g[:, lo:hi] for lo, hi in zip(offsets[:-1], offsets[1:]))

    return _make(np.concatenate([p.data for p in parts], axis=1), tuple(parts), vjp)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-row normalization to zero mean / unit variance, then scale + shift."""
    if x.ndim != 2:
        raise DimensionError(f"layer_norm expects a matrix, got shape {x.shape}")
    mu = x.data.mean(axis=1, keepdims=True)
    var = x.data.var(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = xhat * gain.data + bias.data

    def vjp(g):
        dgain = (g * xhat).sum(axis=0)
        dbias = g.sum(axis=0)
        gx = g * gain.data
        dx = inv * (gx - gx.mean(axis=1, keepdims=True)
                    - xhat * (gx * xhat).mean(axis=1, keepdims=True))
        return dx, dgain, dbias

    return _make(out, (x, gain, bias), vjp)


def take_per_row(x: Tensor, cols) -> Tensor:
    """out[i] = x[i, cols[i]]; gradient scatters back into the picks."""
    cols = np.asarray(cols, dtype=np.intp)
    if x.ndim != 2 or cols.shape != (x.shape[0],):
        raise DimensionError(f"take_per_row: shape {x.shape} with {cols.shape[0]} indices")
    rows = np.arange(x.shape[0])
    shape = x.data.shape

    def vjp(g):
        gx = np.zeros(shape)
        gx[rows, cols] = g
        return (gx,)

    return _make(x.data[rows, cols], (x,), vjp)


def clamp_min(x: Tensor, floor: float) -> Tensor:
    mask = x.data > floor

    def vjp(g):
        return (g * mask,)

    return _make(np.maximum(x.data, floor), (x,), vjp)


def masked_logsumexp_rows(x: Tensor, mask) -> Tensor:
    """Row-wise log-sum-exp over the entries where mask is true.

    Stable (max subtraction restricted to the masked entries); the gradient
    is the masked softmax. Every row needs at least one valid entry.
    """
    mask = np.asarray(mask, dtype=bool)
    if x.ndim != 2 or mask.shape != x.data.shape:
        raise DimensionError(f"masked_logsumexp_rows: data {x.shape} vs mask {mask.shape}")
    if not mask.any(axis=1).all():
        raise DimensionError("masked_logsumexp_rows: a row has no valid entries")
    neg = np.where(mask, x.data, -np.inf)
    m = neg.max(axis=1, keepdims=True)
    out = (m + np.log(np.where(mask, np.exp(neg - m), 0.0).sum(axis=1, keepdims=True)))[:, 0]

    def vjp(g):
        w = np.where(mask, np.exp(x.data - out[:, None]), 0.0)
        return (g[:, None] * w,)

    return _make(out, (x,), vjp)


def l2_normalize_rows(x: Tensor) -> Tensor:
    """Scale each row to unit Euclidean norm (zero rows are left untouched)."""
    if x.ndim != 2:
        raise DimensionError(f"l2_normalize_rows expects a matrix, got shape {x.shape}")
    norms = np.linalg.norm(x.data, axis=1, keepdims=True)
    safe = np.maximum(norms, 1e-12)
    out = x.data / safe

    def vjp(g):
        dot = (g * out).sum(axis=1, keepdims=True)
        return ((g - out * dot) / safe,)

    return _make(out, (x,), vjp)
