"""Loss components: cross-entropy, supervised contrastive, generation.

The contrastive loss runs over a multiview batch: the window's live
embeddings concatenated with gradient-detached copies of themselves. The
copies guarantee every anchor at least one positive, so a class with a
single sample in the window still produces a finite, well-defined term.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .autodiff import (
    Tensor,
    clamp_min,
    concat_rows,
    detach,
    l2_normalize_rows,
    log,
    log_softmax_rows,
    masked_logsumexp_rows,
    matmul,
    mul,
    softmax_rows,
    take_per_row,
    transpose,
    tsum,
)
from .data import PAD_ID
from .errors import ConfigError, DegenerateBatchError, DimensionError
from .layers import init_weight, init_zeros
from .model import SeqModelParams, decode_logits

logger = logging.getLogger(__name__)

GOLD_PROB_FLOOR = 1e-12

SCL_VARIANTS = ("paper-literal", "standard-supcon")


@dataclass
class LossWeights:
    """Mixing weights of the total loss: (1-alpha-beta)*CE + alpha*SCL + beta*Gen."""

    alpha: float = 0.2
    beta: float = 0.1
    tau: float = 0.07

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError(f"loss weights must be >= 0 (alpha={self.alpha}, beta={self.beta})")
        if self.alpha + self.beta >= 1:
            raise ConfigError(
                f"alpha + beta must stay < 1 so cross-entropy keeps positive weight "
                f"(got {self.alpha} + {self.beta})"
            )
        if self.tau <= 0:
            raise ConfigError(f"temperature must be > 0 (got {self.tau})")


@dataclass
class ClassifierHead:
    w: Tensor
    b: Tensor

    @property
    def num_classes(self) -> int:
        return self.w.shape[1]


def init_classifier(d_model: int, num_classes: int, rng: np.random.Generator) -> ClassifierHead:
    return ClassifierHead(w=init_weight(rng, d_model, num_classes), b=init_zeros(num_classes))


@dataclass
class MultiviewBatch:
    """2N-row embedding matrix: N live rows followed by N detached copies."""

    x: Tensor
    labels: np.ndarray
    n_live: int


def build_multiview(h: Tensor, labels) -> MultiviewBatch:
    labels = np.asarray(labels, dtype=np.intp)
    n = h.shape[0]
    if n < 2:
        raise DegenerateBatchError(
            f"contrastive batch needs >= 2 live samples, got {n}: with one sample "
            "the anchor's candidate set is empty"
        )
    if labels.shape != (n,):
        raise DimensionError(f"expected {n} labels, got shape {labels.shape}")
    x = concat_rows([h, detach(h)])
    return MultiviewBatch(x=x, labels=np.concatenate([labels, labels]), n_live=n)


def scl_loss(
    batch: MultiviewBatch,
    tau: float,
    variant: str = "paper-literal",
    normalize: bool = True,
) -> Tensor:
    """Supervised contrastive loss summed over all 2N anchors.

    variant "paper-literal": candidate set A(i) drops the anchor and its
    multiview partner (i+N mod 2N), while positives may still include the
    partner. variant "standard-supcon": A(i) drops only the anchor, and
    positives are a subset of candidates.
    """
    if tau <= 0:
        raise ConfigError(f"temperature must be > 0 (got {tau})")
    if variant not in SCL_VARIANTS:
        raise ConfigError(f"unknown SCL variant {variant!r}; choose from {SCL_VARIANTS}")
    m = 2 * batch.n_live
    x = l2_normalize_rows(batch.x) if normalize else batch.x
    sim = matmul(x, transpose(x)) * (1.0 / tau)

    labels = batch.labels
    eye = np.eye(m, dtype=bool)
    same = labels[:, None] == labels[None, :]
    pos_mask = same & ~eye
    if variant == "paper-literal":
        partner = (np.arange(m) + batch.n_live) % m
        partner_eye = np.zeros((m, m), dtype=bool)
        partner_eye[np.arange(m), partner] = True
        cand_mask = ~eye & ~partner_eye
    else:
        cand_mask = ~eye
        pos_mask = pos_mask & cand_mask

    counts = pos_mask.sum(axis=1)
    if (counts == 0).any():
        raise DegenerateBatchError("an anchor has no positives; multiview invariant violated")

    lse = masked_logsumexp_rows(sim, cand_mask)
    pos_weight = pos_mask.astype(float) / counts[:, None]
    return tsum(lse) - tsum(mul(sim, Tensor(pos_weight)))


def classify(h: Tensor, head: ClassifierHead):
    """Softmax probabilities [N x C] and argmax predictions (ties -> lowest id)."""
    logits = matmul(h, head.w) + head.b
    probs = softmax_rows(logits)
    preds = probs.data.argmax(axis=1)
    return probs, preds


def ce_loss(probs: Tensor, labels, diag: dict | None = None) -> Tensor:
    """Mean negative log-probability of the gold class.

    Gold probabilities are floored at 1e-12 before the log; when the floor
    engages, the count lands in diag["ce_clamped"].
    """
    labels = np.asarray(labels, dtype=np.intp)
    n = probs.shape[0]
    if labels.shape != (n,):
        raise DimensionError(f"expected {n} labels, got shape {labels.shape}")
    gold = take_per_row(probs, labels)
    if diag is not None:
        diag["ce_clamped"] = diag.get("ce_clamped", 0) + int((gold.data < GOLD_PROB_FLOOR).sum())
    return -tsum(log(clamp_min(gold, GOLD_PROB_FLOOR))) * (1.0 / n)


def gen_loss(pairs, params: SeqModelParams) -> Tensor:
    """Teacher-forced next-utterance NLL, averaged over adjacent pairs.

    Each pair is (EncodedUtterance of u_t, gold token ids of u_{t+1}); the
    gold sequence carries its own <s>/</s> frame. Pad targets are excluded
    from the sum. Empty pair lists (e.g. a window of final utterances)
    contribute zero.
    """
    pairs = list(pairs)
    if not pairs:
        logger.debug("gen_loss called with no adjacent pairs; returning 0")
        return Tensor(0.0)
    total = None
    for enc, gold in pairs:
        gold = list(gold)
        if len(gold) < 2:
            raise DimensionError("generation target needs at least <s> and one token")
        targets = gold[1:]
        logits = decode_logits(params, enc, gold[:-1])
        logp = take_per_row(log_softmax_rows(logits), targets)
        keep = np.array([t != PAD_ID for t in targets], dtype=float)
        nll = -tsum(mul(logp, Tensor(keep)))
        total = nll if total is None else total + nll
    return total * (1.0 / len(pairs))


def total_loss(ce: Tensor, scl: Tensor, gen: Tensor, w: LossWeights) -> Tensor:
    return ce * (1.0 - w.alpha - w.beta) + scl * w.alpha + gen * w.beta
