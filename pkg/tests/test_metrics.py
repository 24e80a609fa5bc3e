"""Metrics against independent brute-force counting."""

import json

import numpy as np
import pytest

from convemo.errors import ConfigError, DataError
from convemo.metrics import (
    confusion,
    eval_report,
    micro_f1,
    micro_f1_excluding,
    per_class_prf,
    weighted_f1,
)


def brute_weighted_f1(y_true, y_pred, c):
    """Direct per-class counting with Python loops; no shared code paths."""
    total = len(y_true)
    acc = 0.0
    for k in range(c):
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == k and p == k)
        n_pred = sum(1 for p in y_pred if p == k)
        n_gold = sum(1 for t in y_true if t == k)
        prec = tp / n_pred if n_pred else 0.0
        rec = tp / n_gold if n_gold else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        acc += f1 * n_gold / total
    return acc


def brute_micro_excluding(y_true, y_pred, excl):
    tp = fp = fn = 0
    for t, p in zip(y_true, y_pred):
        if t != excl and p == t:
            tp += 1
        if t != excl and p != t:
            fn += 1
        if p != excl and p != t:
            fp += 1
    if all(t == excl for t in y_true):
        return float("nan")
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


class TestWeightedF1:
    def test_perfect(self):
        assert weighted_f1([0, 1, 2, 1], [0, 1, 2, 1], 3) == 1.0

    def test_hand_example(self):
        got = weighted_f1([0, 0, 1, 1, 2], [0, 1, 1, 1, 2], 3)
        expected = (2 * (2 / 3) + 2 * 0.8 + 1 * 1.0) / 5
        assert abs(got - expected) <= 1e-12
        assert abs(got - 0.78667) <= 5e-6

    def test_all_predictions_miss(self):
        assert weighted_f1([0, 0, 1], [2, 2, 2], 3) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            weighted_f1([], [], 3)

    def test_out_of_range_rejected(self):
        with pytest.raises(DataError):
            weighted_f1([0, 3], [0, 0], 3)
        with pytest.raises(DataError):
            weighted_f1([0, 0], [0, -1], 3)

    def test_length_mismatch_rejected(self):
        with pytest.raises(DataError):
            weighted_f1([0, 1], [0], 3)


class TestMicroF1:
    def test_equals_accuracy(self):
        rng = np.random.default_rng(0)
        y_true = rng.integers(0, 4, size=30)
        y_pred = rng.integers(0, 4, size=30)
        assert micro_f1(y_true, y_pred, 4) == (y_true == y_pred).mean()


class TestMicroF1Excluding:
    def test_hand_example(self):
        # labels: n=0 (excluded), a=1, b=2
        got = micro_f1_excluding([0, 0, 1, 2], [0, 1, 1, 2], 3, excluded_label=0)
        assert abs(got - 0.8) <= 1e-12

    def test_perfect(self):
        assert micro_f1_excluding([0, 1, 2], [0, 1, 2], 3, 0) == 1.0

    def test_all_gold_excluded_is_nan(self, caplog):
        with caplog.at_level("WARNING"):
            got = micro_f1_excluding([0, 0], [0, 1], 3, excluded_label=0)
        assert np.isnan(got)
        assert any("excluded" in r.message for r in caplog.records)

    def test_bad_excluded_label_rejected(self):
        with pytest.raises(ConfigError):
            micro_f1_excluding([0, 1], [0, 1], 3, excluded_label=3)
        with pytest.raises(ConfigError):
            micro_f1_excluding([0, 1], [0, 1], 3, excluded_label=-1)


class TestBruteForceAgreement:
    def test_thousand_random_cases(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            c = int(rng.integers(2, 9))
            n = int(rng.integers(1, 51))
            y_true = rng.integers(0, c, size=n).tolist()
            y_pred = rng.integers(0, c, size=n).tolist()
            excl = int(rng.integers(0, c))
            assert abs(weighted_f1(y_true, y_pred, c)
                       - brute_weighted_f1(y_true, y_pred, c)) <= 1e-12
            got = micro_f1_excluding(y_true, y_pred, c, excl)
            want = brute_micro_excluding(y_true, y_pred, excl)
            if np.isnan(want):
                assert np.isnan(got)
            else:
                assert abs(got - want) <= 1e-12

    def test_permutation_invariance(self):
        rng = np.random.default_rng(7)
        y_true = rng.integers(0, 5, size=40)
        y_pred = rng.integers(0, 5, size=40)
        perm = rng.permutation(40)
        assert weighted_f1(y_true, y_pred, 5) == weighted_f1(y_true[perm], y_pred[perm], 5)
        assert micro_f1_excluding(y_true, y_pred, 5, 2) == \
            micro_f1_excluding(y_true[perm], y_pred[perm], 5, 2)

    def test_bounds(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            c = int(rng.integers(2, 6))
            y_true = rng.integers(0, c, size=20)
            y_pred = rng.integers(0, c, size=20)
            for v in (weighted_f1(y_true, y_pred, c), micro_f1(y_true, y_pred, c)):
                assert 0.0 <= v <= 1.0
            e = micro_f1_excluding(y_true, y_pred, c, 0)
            assert np.isnan(e) or 0.0 <= e <= 1.0


class TestConfusion:
    def test_perfect_is_diagonal_supports(self):
        y = [0, 1, 1, 2, 2, 2]
        mat = confusion(y, y, 3)
        assert np.array_equal(np.diag(mat), [1, 2, 3])
        assert mat.sum() == 6

    def test_single_sample(self):
        mat = confusion([1], [2], 4)
        assert mat[1, 2] == 1 and mat.sum() == 1

    def test_total_is_n(self):
        rng = np.random.default_rng(9)
        y_true = rng.integers(0, 3, size=25)
        y_pred = rng.integers(0, 3, size=25)
        assert confusion(y_true, y_pred, 3).sum() == 25


class TestEvalReport:
    def test_invariants_and_serialization(self):
        rng = np.random.default_rng(10)
        y_true = rng.integers(0, 4, size=30)
        y_pred = rng.integers(0, 4, size=30)
        rep = eval_report(y_true, y_pred, 4, excluded=("neutral", 0))
        assert sum(rep.support) == 30
        mat = np.array(rep.confusion)
        assert np.array_equal(mat.sum(axis=1), rep.support)
        d = json.loads(rep.to_json())
        assert d["weighted_avg_f1"] == rep.weighted_avg_f1
        assert d["micro_f1_excluding"]["label"] == "neutral"
        assert d["support"] == rep.support

    def test_without_exclusion(self):
        rep = eval_report([0, 1], [0, 1], 2)
        assert rep.micro_f1_excluding is None
        assert "micro_f1_excluding" not in rep.to_dict()
        assert rep.weighted_avg_f1 == 1.0

    def test_per_class_values(self):
        precision, recall, f1, support = per_class_prf([0, 0, 1, 1, 2], [0, 1, 1, 1, 2], 3)
        assert np.allclose(precision, [1.0, 2 / 3, 1.0])
        assert np.allclose(recall, [0.5, 1.0, 1.0])
        assert list(support) == [2, 2, 1]
