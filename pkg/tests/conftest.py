"""Shared test utilities: finite-difference checking and tiny fixtures."""

from __future__ import annotations

import numpy as np

from convemo.autodiff import backward
from convemo.config import RunConfig
from convemo.data import Dialogue, LabelMap, Utterance, build_vocab


def fd_check(build, tensors, rng, n_coords=3, h=1e-5, tol=1e-4):
    """Central finite differences against the analytic gradient.

    `build` reconstructs the scalar loss from current tensor data, so
    in-place coordinate perturbations flow through a fresh graph each
    evaluation. Samples up to `n_coords` coordinates per tensor. Returns the
    worst relative error seen; asserts every coordinate within `tol`.
    """
    grads = backward(build())
    worst = 0.0
    for name, t in tensors:
        g = grads.get(t.node_id)
        ga = np.zeros_like(t.data) if g is None else g.data
        k = min(n_coords, t.data.size)
        for fi in rng.choice(t.data.size, size=k, replace=False):
            idx = np.unravel_index(int(fi), t.data.shape)
            orig = t.data[idx]
            t.data[idx] = orig + h
            lp = float(build().data)
            t.data[idx] = orig - h
            lm = float(build().data)
            t.data[idx] = orig
            fd = (lp - lm) / (2 * h)
            a = float(ga[idx])
            rel = abs(a - fd) / max(1.0, abs(a), abs(fd))
            assert rel <= tol, f"{name}{tuple(idx)}: analytic {a} vs fd {fd} (rel {rel:.2e})"
            worst = max(worst, rel)
    return worst


TINY_LABELS = ["a", "b", "c"]


def tiny_cfg(**kw) -> RunConfig:
    base = dict(
        dataset="custom", labels=TINY_LABELS, d_model=8, n_heads=2,
        enc_layers=1, dec_layers=1, d_ff=16, max_len=16, window_size=3,
        alpha=0.3, beta=0.2, tau=0.07, lr=1e-3, epochs=2, warmup_ratio=0.1,
    )
    base.update(kw)
    return RunConfig(**base)


def tiny_dialogue(texts_labels, did="d0", speakers=("mia", "leo")) -> Dialogue:
    utts = tuple(
        Utterance(speaker=speakers[i % 2], text=text, label=label,
                  dialogue_id=did, index_in_dialogue=i)
        for i, (text, label) in enumerate(texts_labels)
    )
    return Dialogue(dialogue_id=did, utterances=utts)


def tiny_corpus():
    d0 = tiny_dialogue([
        ("so happy today", 0),
        ("quite sad now friend", 1),
        ("happy again here", 0),
    ], did="d0")
    d1 = tiny_dialogue([
        ("what a mess", 2),
        ("sad story indeed", 1),
        ("happy end though", 0),
    ], did="d1")
    return [d0, d1]


def tiny_setup(**cfg_kw):
    """(cfg, corpus, vocab, label_map) for quick end-to-end constructions."""
    cfg = tiny_cfg(**cfg_kw)
    corpus = tiny_corpus()
    vocab = build_vocab(corpus)
    return cfg, corpus, vocab, LabelMap(TINY_LABELS)
