"""Dialogue-level Transformer over pooled utterance vectors.

One bidirectional attention layer across the utterances of a window, so
each utterance representation can absorb long-range conversational context
before classification. No causal mask: later utterances may inform earlier
ones within the window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, embedding_lookup
from .errors import DimensionError
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
class DialogueTransformerParams:
    attn: AttentionParams
    ln1: LayerNorm
    ln2: LayerNorm
    ff: FeedForward
    pos: Tensor | None


def init_dialogue_transformer(
    d_model: int,
    n_heads: int,
    d_ff: int,
    max_window: int,
    rng: np.random.Generator,
    use_positions: bool = True,
) -> DialogueTransformerParams:
    """Positions are per-slot-in-window embeddings; disabling them makes the
    layer permutation-equivariant."""
    return DialogueTransformerParams(
        attn=init_attention(d_model, n_heads, rng),
        ln1=init_layer_norm(d_model),
        ln2=init_layer_norm(d_model),
        ff=init_feed_forward(d_model, d_ff, rng),
        pos=init_weight(rng, max_window, d_model) if use_positions else None,
    )


def contextualize(h_win: Tensor, params: DialogueTransformerParams, enabled: bool = True) -> Tensor:
    """Window matrix [w x d] -> contextualized matrix [w x d].

    Disabled (the -Dialog-Trans ablation) is an exact identity pass-through.
    """
    if not enabled:
        return h_win
    if h_win.ndim != 2 or h_win.shape[0] < 1:
        raise DimensionError(f"contextualize expects a non-empty matrix, got {h_win.shape}")
    x = h_win
    if params.pos is not None:
        x = x + embedding_lookup(params.pos, np.arange(h_win.shape[0]))
    h = norm(x, params.ln1)
    x = x + multi_head_attention(h, h, params.attn)
    x = x + feed_forward(norm(x, params.ln2), params.ff)
    return x
