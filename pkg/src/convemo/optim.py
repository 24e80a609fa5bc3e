"""AdamW with decoupled weight decay, a linear warmup/decay schedule, and
global-norm gradient clipping.

Parameters are updated in place between tape builds; the optimizer never
touches the autodiff graph itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor
from .errors import NumericError


def lr_at(step: int, total_steps: int, warmup_ratio: float, peak_lr: float) -> float:
    """Linear ramp 0 -> peak over ceil(ratio * total) steps, then linear
    decay peak -> 0 at total_steps. Continuous and piecewise-linear."""
    if total_steps < 1:
        raise ValueError(f"total_steps must be >= 1, got {total_steps}")
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    warmup = math.ceil(warmup_ratio * total_steps)
    if warmup > 0 and step <= warmup:
        return peak_lr * step / warmup
    return peak_lr * (total_steps - step) / (total_steps - warmup)


@dataclass
class AdamWState:
    """First/second moment accumulators keyed like the parameter list."""

    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients down so their joint L2 norm is <= max_norm.

    Returns the pre-clip norm. NaN or inf anywhere aborts: a poisoned
    gradient must never reach the moments.
    """
    sq = 0.0
    for g in grads.values():
        if not np.isfinite(g).all():
            raise NumericError("non-finite gradient; aborting the step")
        sq += float((g * g).sum())
    total = math.sqrt(sq)
    if total > max_norm > 0:
        factor = max_norm / total
        for name in grads:
            grads[name] = grads[name] * factor
    return total


def adamw_step(
    params: list[tuple[str, Tensor]],
    grads: dict[str, np.ndarray],
    state: AdamWState,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    weight_decay: float = 0.01,
) -> None:
    """One bias-corrected AdamW update, applied in place.

    Decay is decoupled: p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p).
    Parameters without a gradient this step are left untouched, moments
    included.
    """
    b1, b2 = betas
    state.step += 1
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for name, p in params:
        g = grads.get(name)
        if g is None:
            continue
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient for {name!r}; aborting the step")
        g = np.asarray(g, dtype=np.float64)
        if g.shape != p.data.shape:
            raise NumericError(f"gradient shape {g.shape} != param shape {p.data.shape} ({name})")
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None:
            m = np.zeros_like(p.data)
            v = np.zeros_like(p.data)
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        state.m[name] = m
        state.v[name] = v
        update = (m / c1) / (np.sqrt(v / c2) + eps)
        p.data = p.data - lr * (update + weight_decay * p.data)
