"""Classification metrics: weighted-average F1, micro-F1 with an excluded
label, per-class breakdowns, and confusion matrices.

Written directly from the counting definitions so they can serve as an
oracle against library implementations rather than the other way round.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)


def _check_labels(y_true, y_pred, num_classes):
    y_true = np.asarray(y_true, dtype=np.intp)
    y_pred = np.asarray(y_pred, dtype=np.intp)
    if y_true.size == 0:
        raise DataError("metrics need at least one sample")
    if y_true.shape != y_pred.shape:
        raise DataError(f"label vectors disagree: {y_true.shape} vs {y_pred.shape}")
    for name, v in (("gold", y_true), ("predicted", y_pred)):
        if v.min() < 0 or v.max() >= num_classes:
            raise DataError(f"{name} label out of range [0, {num_classes})")
    return y_true, y_pred


def confusion(y_true, y_pred, num_classes: int) -> np.ndarray:
    """Matrix whose [i, j] entry counts gold class i predicted as j."""
    y_true, y_pred = _check_labels(y_true, y_pred, num_classes)
    mat = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(mat, (y_true, y_pred), 1)
    return mat


def per_class_prf(y_true, y_pred, num_classes: int):
    """Per-class (precision, recall, f1, support) arrays; 0 where undefined."""
    mat = confusion(y_true, y_pred, num_classes)
    tp = np.diag(mat).astype(float)
    pred_totals = mat.sum(axis=0).astype(float)
    supports = mat.sum(axis=1).astype(float)
    precision = np.divide(tp, pred_totals, out=np.zeros(num_classes), where=pred_totals > 0)
    recall = np.divide(tp, supports, out=np.zeros(num_classes), where=supports > 0)
    pr = precision + recall
    f1 = np.divide(2 * precision * recall, pr, out=np.zeros(num_classes), where=pr > 0)
    return precision, recall, f1, supports.astype(np.int64)


def weighted_f1(y_true, y_pred, num_classes: int) -> float:
    """Support-weighted mean of per-class F1."""
    _, _, f1, supports = per_class_prf(y_true, y_pred, num_classes)
    return float((f1 * supports).sum() / supports.sum())


def micro_f1(y_true, y_pred, num_classes: int) -> float:
    y_true, y_pred = _check_labels(y_true, y_pred, num_classes)
    return float((y_true == y_pred).mean())


def micro_f1_excluding(y_true, y_pred, num_classes: int, excluded_label: int) -> float:
    """Micro-F1 pooled over every class except `excluded_label`.

    Predicting the excluded label on non-excluded gold pools as a miss (FN);
    predicting a non-excluded label on excluded gold pools as a false alarm
    (FP). All-excluded gold leaves the pool empty: returns NaN with a log
    message rather than inventing a score.
    """
    if not 0 <= excluded_label < num_classes:
        raise ConfigError(f"excluded label {excluded_label} outside [0, {num_classes})")
    y_true, y_pred = _check_labels(y_true, y_pred, num_classes)
    gold_kept = y_true != excluded_label
    pred_kept = y_pred != excluded_label
    tp = int((gold_kept & pred_kept & (y_true == y_pred)).sum())
    fn = int((gold_kept & (y_true != y_pred)).sum())
    fp = int((pred_kept & (y_true != y_pred)).sum())
    if not gold_kept.any():
        logger.warning("micro_f1_excluding: every gold label is the excluded one")
        return float("nan")
    denom = 2 * tp + fp + fn
    return float(2 * tp / denom) if denom else 0.0


@dataclass
class EvalReport:
    """Per-class and aggregate scores for one split."""

    precision: list[float]
    recall: list[float]
    f1: list[float]
    support: list[int]
    weighted_avg_f1: float
    micro_f1: float
    confusion: list[list[int]]
    micro_f1_excluding: tuple[str, float] | None = None

    def to_dict(self) -> dict:
        d = {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
            "weighted_avg_f1": self.weighted_avg_f1,
            "micro_f1": self.micro_f1,
            "confusion": self.confusion,
        }
        if self.micro_f1_excluding is not None:
            name, value = self.micro_f1_excluding
            d["micro_f1_excluding"] = {"label": name, "value": value}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def eval_report(y_true, y_pred, num_classes: int, excluded: tuple[str, int] | None = None) -> EvalReport:
    precision, recall, f1, support = per_class_prf(y_true, y_pred, num_classes)
    excl = None
    if excluded is not None:
        name, label_id = excluded
        excl = (name, micro_f1_excluding(y_true, y_pred, num_classes, label_id))
    return EvalReport(
        precision=[float(v) for v in precision],
        recall=[float(v) for v in recall],
        f1=[float(v) for v in f1],
        support=[int(v) for v in support],
        weighted_avg_f1=weighted_f1(y_true, y_pred, num_classes),
        micro_f1=micro_f1(y_true, y_pred, num_classes),
        confusion=confusion(y_true, y_pred, num_classes).tolist(),
        micro_f1_excluding=excl,
    )
