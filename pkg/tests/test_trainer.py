"""Training loop mechanics: weight reassignment, determinism, best-dev
selection, the ablation matrix."""

import numpy as np
import pytest

from conftest import tiny_dialogue, tiny_setup
from convemo.data import make_windows
from convemo.errors import DataError
from convemo.trainer import (
    ABLATION_ROWS,
    dump_embeddings,
    evaluate_split,
    init_model,
    param_list,
    predict_corpus,
    primary_score,
    restore_params,
    run_ablation,
    snapshot_params,
    train_single,
    window_loss,
)


def fresh_model(cfg, vocab, label_map, seed=0):
    return init_model(len(vocab), label_map.num_classes, cfg, np.random.default_rng(seed))


class TestWindowLoss:
    def test_weights_sum_to_one(self):
        cfg, corpus, vocab, lm = tiny_setup()
        model = fresh_model(cfg, vocab, lm)
        for dlg in corpus:
            for window in make_windows(dlg, cfg.window_size):
                _, parts = window_loss(model, window, vocab, cfg, {})
                assert abs(parts["w_ce"] + parts["w_scl"] + parts["w_gen"] - 1.0) <= 1e-12

    def test_total_combines_parts(self):
        cfg, corpus, vocab, lm = tiny_setup()
        model = fresh_model(cfg, vocab, lm)
        window = make_windows(corpus[0], cfg.window_size)[0]
        _, p = window_loss(model, window, vocab, cfg, {})
        mix = p["w_ce"] * p["ce"] + p["w_scl"] * p["scl"] + p["w_gen"] * p["gen"]
        assert abs(p["total"] - mix) <= 1e-12

    def test_scl_off_reassigns_weight_to_ce(self):
        cfg, corpus, vocab, lm = tiny_setup(use_scl=False)
        model = fresh_model(cfg, vocab, lm)
        window = make_windows(corpus[0], cfg.window_size)[0]
        _, p = window_loss(model, window, vocab, cfg, {})
        assert p["w_scl"] == 0.0 and p["scl"] == 0.0
        assert abs(p["total"] - ((1 - cfg.beta) * p["ce"] + cfg.beta * p["gen"])) <= 1e-12

    def test_gen_off_reassigns_weight_to_ce(self):
        cfg, corpus, vocab, lm = tiny_setup(use_gen=False)
        model = fresh_model(cfg, vocab, lm)
        window = make_windows(corpus[0], cfg.window_size)[0]
        _, p = window_loss(model, window, vocab, cfg, {})
        assert p["w_gen"] == 0.0 and p["gen"] == 0.0
        assert abs(p["total"] - ((1 - cfg.alpha) * p["ce"] + cfg.alpha * p["scl"])) <= 1e-12

    def test_singleton_window_falls_back_to_ce(self):
        cfg, _, vocab, lm = tiny_setup()
        model = fresh_model(cfg, vocab, lm)
        solo = tiny_dialogue([("left alone", 2)], did="solo")
        diag = {}
        _, p = window_loss(model, solo.utterances, vocab, cfg, diag)
        assert (p["w_ce"], p["w_scl"], p["w_gen"]) == (1.0, 0.0, 0.0)
        assert abs(p["total"] - p["ce"]) <= 1e-12
        assert diag["scl_skipped"] == 1

    def test_speaker_toggle_changes_encoding(self):
        cfg_on, corpus, vocab, lm = tiny_setup()
        cfg_off = cfg_on.replace(use_speaker=False)
        model = fresh_model(cfg_on, vocab, lm)
        window = make_windows(corpus[0], cfg_on.window_size)[0]
        _, p_on = window_loss(model, window, vocab, cfg_on, {})
        _, p_off = window_loss(model, window, vocab, cfg_off, {})
        assert p_on["ce"] != p_off["ce"]


class TestTrainSingle:
    def test_same_seed_bitwise_identical(self):
        cfg, corpus, vocab, lm = tiny_setup(epochs=2)
        r1 = train_single(cfg, 7, corpus, None, vocab, lm)
        r2 = train_single(cfg, 7, corpus, None, vocab, lm)
        assert r1.history == r2.history
        s1, s2 = snapshot_params(r1.model), snapshot_params(r2.model)
        assert all(np.array_equal(s1[k], s2[k]) for k in s1)

    def test_different_seeds_differ(self):
        cfg, corpus, vocab, lm = tiny_setup(epochs=1)
        r1 = train_single(cfg, 0, corpus, None, vocab, lm)
        r2 = train_single(cfg, 1, corpus, None, vocab, lm)
        assert r1.history[0]["loss"] != r2.history[0]["loss"]

    def test_history_rows_carry_components(self):
        cfg, corpus, vocab, lm = tiny_setup(epochs=2)
        res = train_single(cfg, 0, corpus, None, vocab, lm)
        assert [row["epoch"] for row in res.history] == [1, 2]
        for row in res.history:
            assert abs(row["weight_sum"] - 1.0) <= 1e-12
            mix = row["contrib_ce"] + row["contrib_scl"] + row["contrib_gen"]
            assert abs(row["loss"] - mix) <= 1e-9
            assert 0.0 <= row["train_acc"] <= 1.0

    def test_best_dev_snapshot_restored(self):
        cfg, corpus, vocab, lm = tiny_setup(epochs=3)
        dev = [tiny_dialogue([("happy here too", 0), ("sad tale", 1)], did="dev0")]
        res = train_single(cfg, 3, corpus, dev, vocab, lm)
        assert res.best_dev_score is not None and res.best_epoch is not None
        assert res.best_dev_score == max(r["dev_score"] for r in res.history)
        rep = evaluate_split(res.model, dev, vocab, cfg, lm)
        assert primary_score(rep, lm) == res.best_dev_score

    def test_no_dev_returns_final_model(self):
        cfg, corpus, vocab, lm = tiny_setup(epochs=1)
        res = train_single(cfg, 0, corpus, None, vocab, lm)
        assert res.best_dev_score is None and res.best_epoch is None

    def test_early_stop(self):
        cfg, corpus, vocab, lm = tiny_setup(epochs=50, early_stop_train_acc=0.0)
        res = train_single(cfg, 0, corpus, None, vocab, lm)
        assert len(res.history) == 1

    def test_empty_corpus_rejected(self):
        cfg, _, vocab, lm = tiny_setup()
        with pytest.raises(DataError):
            train_single(cfg, 0, [], None, vocab, lm)

    def test_snapshot_restore_round_trip(self):
        cfg, corpus, vocab, lm = tiny_setup()
        model = fresh_model(cfg, vocab, lm)
        snap = snapshot_params(model)
        for _, t in param_list(model):
            t.data = t.data + 1.0
        restore_params(model, snap)
        now = snapshot_params(model)
        assert all(np.array_equal(now[k], snap[k]) for k in snap)


class TestEvaluation:
    def test_report_supports_sum_to_utterances(self):
        cfg, corpus, vocab, lm = tiny_setup()
        model = fresh_model(cfg, vocab, lm)
        rep = evaluate_split(model, corpus, vocab, cfg, lm)
        assert sum(rep.support) == sum(len(d.utterances) for d in corpus)

    def test_excluded_label_reported(self):
        cfg, corpus, vocab, _ = tiny_setup()
        from convemo.data import LabelMap
        lm = LabelMap(["a", "b", "c"], excluded="b")
        model = fresh_model(cfg, vocab, lm)
        rep = evaluate_split(model, corpus, vocab, cfg, lm)
        assert rep.micro_f1_excluding is not None
        assert rep.micro_f1_excluding[0] == "b"
        assert primary_score(rep, lm) == rep.micro_f1_excluding[1]

    def test_primary_score_defaults_to_weighted_f1(self):
        cfg, corpus, vocab, lm = tiny_setup()
        model = fresh_model(cfg, vocab, lm)
        rep = evaluate_split(model, corpus, vocab, cfg, lm)
        assert primary_score(rep, lm) == rep.weighted_avg_f1

    def test_predict_corpus_covers_every_utterance(self):
        cfg, corpus, vocab, lm = tiny_setup(window_size=2)
        model = fresh_model(cfg, vocab, lm)
        y_true, y_pred = predict_corpus(model, corpus, vocab, cfg)
        assert len(y_true) == len(y_pred) == 6
        golds = [u.label for d in corpus for u in d.utterances]
        assert list(y_true) == golds


class TestDumpEmbeddings:
    def test_rows_and_columns(self):
        cfg, corpus, vocab, lm = tiny_setup()
        model = fresh_model(cfg, vocab, lm)
        lines = dump_embeddings(model, corpus, vocab, cfg, lm)
        assert len(lines) == 6
        first = lines[0].split("\t")
        assert first[0] == "d0" and first[1] == "0"
        assert first[2] in lm.names and first[3] in lm.names
        assert len(first) == 4 + cfg.d_model

    def test_deterministic(self):
        cfg, corpus, vocab, lm = tiny_setup()
        model = fresh_model(cfg, vocab, lm)
        assert dump_embeddings(model, corpus, vocab, cfg, lm) == \
            dump_embeddings(model, corpus, vocab, cfg, lm)


class TestAblation:
    def test_eight_rows_with_expected_toggles(self):
        names = [name for name, _ in ABLATION_ROWS]
        assert len(names) == 8
        assert names[0] == "full"
        toggles = dict(ABLATION_ROWS)
        assert toggles["-Gen"] == {"use_gen": False}
        assert toggles["-SCL"] == {"use_scl": False}
        assert toggles["-Gen-SCL"] == {"use_gen": False, "use_scl": False}
        assert toggles["-Dialog-Trans"] == {"use_dialog_trans": False}

    def test_matrix_runs_and_zeroes_disabled_components(self):
        cfg, corpus, vocab, lm = tiny_setup(epochs=1, seeds=[0, 1])
        rows = run_ablation(cfg, corpus, None, vocab, lm)
        assert [r["name"] for r in rows] == [name for name, _ in ABLATION_ROWS]
        for row in rows:
            assert len(row["seed_scores"]) == 2
            assert row["mean_score"] == pytest.approx(np.mean(row["seed_scores"]))
            assert abs(row["weight_sum"] - 1.0) <= 1e-12
            if not row["toggles"].get("use_scl", True):
                assert row["w_scl"] == 0.0 and row["contrib_scl"] == 0.0
            if not row["toggles"].get("use_gen", True):
                assert row["w_gen"] == 0.0 and row["contrib_gen"] == 0.0
