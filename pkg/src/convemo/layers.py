"""Reusable network blocks: attention, feed-forward, layer-norm wiring.

All blocks are pure functions over parameter dataclasses holding Tensors;
nothing here owns training state. Weights init at normal(0, 0.02), biases
and layer-norm shifts at zero, layer-norm gains at one.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Tensor,
    concat_cols,
    layer_norm,
    matmul,
    softmax_rows,
    tanh,
    transpose,
)
from .errors import ConfigError, DimensionError

INIT_SCALE = 0.02

_GELU_C = math.sqrt(2.0 / math.pi)


def gelu(x: Tensor) -> Tensor:
    """tanh-form GELU; smooth everywhere, which keeps finite-difference
    gradient checks well conditioned."""
    inner = (x + (x * x * x) * 0.044715) * _GELU_C
    return (x * 0.5) * (tanh(inner) + 1.0)


def init_weight(rng: np.random.Generator, *shape) -> Tensor:
    return Tensor(rng.normal(0.0, INIT_SCALE, size=shape), requires_grad=True)


def init_zeros(*shape) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


def init_ones(*shape) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=True)


@dataclass
class LayerNorm:
    gain: Tensor
    bias: Tensor


def init_layer_norm(d: int) -> LayerNorm:
    return LayerNorm(gain=init_ones(d), bias=init_zeros(d))


def norm(x: Tensor, p: LayerNorm) -> Tensor:
    return layer_norm(x, p.gain, p.bias)


@dataclass
class AttentionParams:
    """Per-head projection matrices plus the shared output projection.

    wq/wk/wv hold one [d x d_k] matrix per head; wo is [d x d]. No biases.
    """

    wq: list[Tensor]
    wk: list[Tensor]
    wv: list[Tensor]
    wo: Tensor

    @property
    def n_heads(self) -> int:
        return len(self.wq)

    @property
    def d_model(self) -> int:
        return self.wq[0].shape[0]

    @property
    def d_k(self) -> int:
        return self.wq[0].shape[1]


def init_attention(d_model: int, n_heads: int, rng: np.random.Generator) -> AttentionParams:
    if d_model % n_heads != 0:
        raise ConfigError(f"n_heads ({n_heads}) must divide d_model ({d_model})")
    d_k = d_model // n_heads
    return AttentionParams(
        wq=[init_weight(rng, d_model, d_k) for _ in range(n_heads)],
        wk=[init_weight(rng, d_model, d_k) for _ in range(n_heads)],
        wv=[init_weight(rng, d_model, d_k) for _ in range(n_heads)],
        wo=init_weight(rng, d_model, d_model),
    )


def multi_head_attention(
    queries: Tensor,
    keys_values: Tensor,
    params: AttentionParams,
    mask: np.ndarray | None = None,
    return_weights: bool = False,
):
    """Scaled dot-product attention per head, concatenated and projected.

    `mask` is an additive bias broadcastable to [a x b] (0 keeps, NEG_INF
    drops). With `return_weights` the per-head softmax matrices come back
    too, as plain arrays.
    """
    if queries.ndim != 2 or keys_values.ndim != 2:
        raise DimensionError("attention expects matrices")
    if queries.shape[1] != params.d_model or keys_values.shape[1] != params.d_model:
        raise DimensionError(
            f"attention dim mismatch: inputs {queries.shape}/{keys_values.shape} "
            f"vs params d_model {params.d_model}"
        )
    inv_sqrt_dk = 1.0 / math.sqrt(params.d_k)
    heads = []
    weights = []
    for wq, wk, wv in zip(params.wq, params.wk, params.wv):
        q = matmul(queries, wq)
        k = matmul(keys_values, wk)
        v = matmul(keys_values, wv)
        scores = matmul(q, transpose(k)) * inv_sqrt_dk
        if mask is not None:
            scores = scores + Tensor(np.broadcast_to(mask, scores.shape))
        attn = softmax_rows(scores)
        heads.append(matmul(attn, v))
        if return_weights:
            weights.append(attn.data.copy())
    out = matmul(concat_cols(heads), params.wo)
    if return_weights:
        return out, weights
    return out


@dataclass
class FeedForward:
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor


def init_feed_forward(d_model: int, d_ff: int, rng: np.random.Generator) -> FeedForward:
    return FeedForward(
        w1=init_weight(rng, d_model, d_ff),
        b1=init_zeros(d_ff),
        w2=init_weight(rng, d_ff, d_model),
        b2=init_zeros(d_model),
    )


def feed_forward(x: Tensor, p: FeedForward) -> Tensor:
    return matmul(gelu(matmul(x, p.w1) + p.b1), p.w2) + p.b2


def named_tensors(obj, prefix: str = ""):
    """Depth-first (name, Tensor) pairs over a parameter dataclass tree.

    Non-Tensor leaves (dims, flags, None) are skipped. Order follows field
    declaration and list position, so it is stable across runs.
    """
    if isinstance(obj, Tensor):
        yield prefix, obj
    elif dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        for f in dataclasses.fields(obj):
            sub = f.name if not prefix else f"{prefix}.{f.name}"
            yield from named_tensors(getattr(obj, f.name), sub)
    elif isinstance(obj, (list, tuple)):
        for i, item in enumerate(obj):
            yield from named_tensors(item, f"{prefix}.{i}")
