"""Toy encoder-decoder transformer over utterance token ids.

Pre-layer-norm blocks with a final norm after each stack. The token
embedding table is shared three ways: encoder input, decoder input, and
(transposed) output projection. One learned position table serves both
stacks. Padding is excluded from attention and pooling via additive masks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    NEG_INF,
    Tensor,
    embedding_lookup,
    matmul,
    max_pool_rows,
    transpose,
)
from .data import BOS_ID, EOS_ID, PAD_ID
from .errors import DataError
from .layers import (
    AttentionParams,
    FeedForward,
    LayerNorm,
    feed_forward,
    init_attention,
    init_feed_forward,
    init_layer_norm,
    init_weight,
    multi_head_attention,
    norm,
)


@dataclass
class EncoderLayer:
    attn: AttentionParams
    ln1: LayerNorm
    ln2: LayerNorm
    ff: FeedForward


@dataclass
class DecoderLayer:
    self_attn: AttentionParams
    cross_attn: AttentionParams
    ln1: LayerNorm
    ln2: LayerNorm
    ln3: LayerNorm
    ff: FeedForward


@dataclass
class SeqModelParams:
    tok_emb: Tensor
    pos_emb: Tensor
    enc_layers: list[EncoderLayer]
    dec_layers: list[DecoderLayer]
    enc_norm: LayerNorm
    dec_norm: LayerNorm

    @property
    def vocab_size(self) -> int:
        return self.tok_emb.shape[0]

    @property
    def d_model(self) -> int:
        return self.tok_emb.shape[1]

    @property
    def max_len(self) -> int:
        return self.pos_emb.shape[0]


@dataclass
class EncodedUtterance:
    """Per-token states [s x d], the pooled vector [d], and the pad mask."""

    hidden: Tensor
    pooled: Tensor
    mask: np.ndarray


def init_seq_model(
    vocab_size: int,
    d_model: int = 64,
    n_heads: int = 4,
    n_enc_layers: int = 2,
    n_dec_layers: int = 2,
    d_ff: int = 128,
    max_len: int = 64,
    rng: np.random.Generator | None = None,
) -> SeqModelParams:
    rng = rng or np.random.default_rng(0)

    def enc_layer():
        return EncoderLayer(
            attn=init_attention(d_model, n_heads, rng),
            ln1=init_layer_norm(d_model),
            ln2=init_layer_norm(d_model),
            ff=init_feed_forward(d_model, d_ff, rng),
        )

    def dec_layer():
        return DecoderLayer(
            self_attn=init_attention(d_model, n_heads, rng),
            cross_attn=init_attention(d_model, n_heads, rng),
            ln1=init_layer_norm(d_model),
            ln2=init_layer_norm(d_model),
            ln3=init_layer_norm(d_model),
            ff=init_feed_forward(d_model, d_ff, rng),
        )

    return SeqModelParams(
        tok_emb=init_weight(rng, vocab_size, d_model),
        pos_emb=init_weight(rng, max_len, d_model),
        enc_layers=[enc_layer() for _ in range(n_enc_layers)],
        dec_layers=[dec_layer() for _ in range(n_dec_layers)],
        enc_norm=init_layer_norm(d_model),
        dec_norm=init_layer_norm(d_model),
    )


def _embed(params: SeqModelParams, ids) -> Tensor:
    tok = embedding_lookup(params.tok_emb, ids)
    pos = embedding_lookup(params.pos_emb, np.arange(len(ids)))
    return tok + pos


def key_pad_bias(mask: np.ndarray) -> np.ndarray:
    """Additive [1 x s] attention bias hiding pad key positions."""
    return np.where(np.asarray(mask, dtype=bool)[None, :], 0.0, NEG_INF)


def encode(params: SeqModelParams, ids) -> EncodedUtterance:
    """Token ids -> per-token hidden states and a max-pooled utterance vector.

    Pad positions neither receive attention nor enter the pool, so appending
    pads leaves the non-pad states and the pooled vector unchanged.
    """
    ids = list(ids)
    if not ids:
        raise DataError("cannot encode an empty token sequence")
    mask = np.array([i != PAD_ID for i in ids], dtype=bool)
    bias = key_pad_bias(mask)
    x = _embed(params, ids)
    for layer in params.enc_layers:
        h = norm(x, layer.ln1)
        x = x + multi_head_attention(h, h, layer.attn, mask=bias)
        x = x + feed_forward(norm(x, layer.ln2), layer.ff)
    x = norm(x, params.enc_norm)
    pooled = max_pool_rows(x, row_mask=mask)
    return EncodedUtterance(hidden=x, pooled=pooled, mask=mask)


def causal_bias(t: int) -> np.ndarray:
    """Additive [t x t] bias letting position j attend to positions <= j."""
    return np.where(np.tril(np.ones((t, t), dtype=bool)), 0.0, NEG_INF)


def decode_logits(params: SeqModelParams, enc: EncodedUtterance, target_ids) -> Tensor:
    """Teacher-forced next-token logits, one row per target position.

    Row j is conditioned on the encoder states and target positions <= j
    (causal self-attention), so it scores candidates for position j+1.
    """
    target_ids = list(target_ids)
    if not target_ids:
        raise DataError("decoder target is empty")
    x = _embed(params, target_ids)
    self_bias = causal_bias(len(target_ids))
    cross_bias = key_pad_bias(enc.mask)
    for layer in params.dec_layers:
        h = norm(x, layer.ln1)
        x = x + multi_head_attention(h, h, layer.self_attn, mask=self_bias)
        x = x + multi_head_attention(norm(x, layer.ln2), enc.hidden, layer.cross_attn,
                                     mask=cross_bias)
        x = x + feed_forward(norm(x, layer.ln3), layer.ff)
    x = norm(x, params.dec_norm)
    return matmul(x, transpose(params.tok_emb))


def greedy_generate(params: SeqModelParams, enc: EncodedUtterance, max_steps: int) -> list[int]:
    """Argmax decoding from <s>; stops at </s> or after max_steps tokens.

    The returned sequence excludes the initial <s>. Steps are capped so the
    prefix never outgrows the position table.
    """
    steps = min(max_steps, params.max_len - 1)
    prefix = [BOS_ID]
    out: list[int] = []
    while len(out) < steps:
        logits = decode_logits(params, enc, prefix).data[-1]
        nxt = int(logits.argmax())
        out.append(nxt)
        prefix.append(nxt)
        if nxt == EOS_ID:
            break
    return out
