"""scikit-learn style estimator wrapping the full training recipe.

X is a list of dialogues (corpus-format dicts or Dialogue objects); the
per-utterance gold labels travel inside the dialogues, so fit's y is
accepted only for API compatibility and must be None. Predictions are
label names, one per utterance, flattened in corpus order.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig
from .data import (
    Dialogue,
    LabelMap,
    build_vocab,
    dialogue_from_record,
    make_windows,
)
from .errors import DataError
from .objectives import classify
from .trainer import (
    encode_window,
    evaluate_split,
    predict_corpus,
    primary_score,
    train_single,
)


def as_dialogues(X, label_map: LabelMap) -> list[Dialogue]:
    """Validate and normalize estimator input to a list of Dialogues."""
    if isinstance(X, (dict, Dialogue)) or isinstance(X, str):
        raise DataError("X must be a sequence of dialogues, not a single one")
    out = []
    for i, item in enumerate(X):
        if isinstance(item, Dialogue):
            out.append(item)
        elif isinstance(item, dict):
            out.append(dialogue_from_record(item, label_map, where=f"X[{i}]"))
        else:
            raise DataError(f"X[{i}] is {type(item).__name__}, expected dict or Dialogue")
    if not out:
        raise DataError("X is empty")
    return out


class DialogueEmotionClassifier(BaseEstimator, ClassifierMixin):
    """Utterance-level emotion classifier with dialogue context.

    Parameters mirror RunConfig; see that class for semantics. `labels`
    overrides the dataset's built-in label set.
    """

    def __init__(self, dataset="meld", labels=None, excluded_label=None,
                 d_model=64, n_heads=4, enc_layers=2, dec_layers=2, d_ff=128,
                 max_len=64, window_size=4, alpha=0.2, beta=0.1, tau=0.07,
                 scl_variant="paper-literal", scl_normalize=True, lr=3e-4,
                 warmup_ratio=0.1, epochs=30, weight_decay=0.01, grad_clip=1.0,
                 seed=0, min_freq=1, early_stop_train_acc=None, use_gen=True,
                 use_scl=True, use_speaker=True, use_dialog_trans=True,
                 context_positions=True):
        self.dataset = dataset
        self.labels = labels
        self.excluded_label = excluded_label
        self.d_model = d_model
        self.n_heads = n_heads
        self.enc_layers = enc_layers
        self.dec_layers = dec_layers
        self.d_ff = d_ff
        self.max_len = max_len
        self.window_size = window_size
        self.alpha = alpha
        self.beta = beta
        self.tau = tau
        self.scl_variant = scl_variant
        self.scl_normalize = scl_normalize
        self.lr = lr
        self.warmup_ratio = warmup_ratio
        self.epochs = epochs
        self.weight_decay = weight_decay
        self.grad_clip = grad_clip
        self.seed = seed
        self.min_freq = min_freq
        self.early_stop_train_acc = early_stop_train_acc
        self.use_gen = use_gen
        self.use_scl = use_scl
        self.use_speaker = use_speaker
        self.use_dialog_trans = use_dialog_trans
        self.context_positions = context_positions

    def _config(self) -> RunConfig:
        return RunConfig(
            dataset=self.dataset, labels=self.labels,
            excluded_label=self.excluded_label, min_freq=self.min_freq,
            d_model=self.d_model, n_heads=self.n_heads,
            enc_layers=self.enc_layers, dec_layers=self.dec_layers,
            d_ff=self.d_ff, max_len=self.max_len, window_size=self.window_size,
            alpha=self.alpha, beta=self.beta, tau=self.tau,
            scl_variant=self.scl_variant, scl_normalize=self.scl_normalize,
            lr=self.lr, warmup_ratio=self.warmup_ratio, epochs=self.epochs,
            weight_decay=self.weight_decay, grad_clip=self.grad_clip,
            seeds=[self.seed], early_stop_train_acc=self.early_stop_train_acc,
            use_gen=self.use_gen, use_scl=self.use_scl,
            use_speaker=self.use_speaker, use_dialog_trans=self.use_dialog_trans,
            context_positions=self.context_positions,
        )

    def fit(self, X, y=None, dev=None):
        """Train on dialogues X; optional dev dialogues select the kept model."""
        if y is not None:
            raise DataError("labels travel inside the dialogues; pass y=None")
        cfg = self._config()
        label_map = cfg.label_map()
        train = as_dialogues(X, label_map)
        dev_d = as_dialogues(dev, label_map) if dev is not None else None
        vocab = build_vocab(train, cfg.min_freq)
        result = train_single(cfg, self.seed, train, dev_d, vocab, label_map)
        self.config_ = cfg
        self.label_map_ = label_map
        self.vocab_ = vocab
        self.model_ = result.model
        self.history_ = result.history
        self.best_dev_score_ = result.best_dev_score
        self.classes_ = np.array(label_map.names)
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError(
                "this DialogueEmotionClassifier is not fitted; call fit first"
            )

    def predict(self, X):
        """Predicted label names, one per utterance, in corpus order."""
        self._check_fitted()
        dialogues = as_dialogues(X, self.label_map_)
        _, y_pred = predict_corpus(self.model_, dialogues, self.vocab_, self.config_)
        return self.classes_[y_pred]

    def predict_proba(self, X):
        """Class probabilities [n_utterances x n_classes]; columns follow classes_."""
        self._check_fitted()
        dialogues = as_dialogues(X, self.label_map_)
        rows = []
        for dlg in dialogues:
            for window in make_windows(dlg, self.config_.window_size):
                _, h_ctx, _ = encode_window(self.model_, window, self.vocab_, self.config_)
                probs, _ = classify(h_ctx, self.model_.head)
                rows.append(probs.data)
        return np.concatenate(rows, axis=0)

    def transform(self, X):
        """Contextualized utterance embeddings [n_utterances x d_model]."""
        self._check_fitted()
        dialogues = as_dialogues(X, self.label_map_)
        rows = []
        for dlg in dialogues:
            for window in make_windows(dlg, self.config_.window_size):
                _, h_ctx, _ = encode_window(self.model_, window, self.vocab_, self.config_)
                rows.append(h_ctx.data)
        return np.concatenate(rows, axis=0)

    def score(self, X, y=None, sample_weight=None):
        """Primary metric on the gold labels inside X: micro-F1 excluding the
        excluded label when one is configured, weighted-average F1 otherwise."""
        self._check_fitted()
        dialogues = as_dialogues(X, self.label_map_)
        report = evaluate_split(self.model_, dialogues, self.vocab_,
                                self.config_, self.label_map_)
        return primary_score(report, self.label_map_)

    def evaluation_report(self, X):
        self._check_fitted()
        dialogues = as_dialogues(X, self.label_map_)
        return evaluate_split(self.model_, dialogues, self.vocab_,
                              self.config_, self.label_map_)

    def save(self, path):
        self._check_fitted()
        save_checkpoint(path, self.model_, self.config_, self.vocab_,
                        self.label_map_,
                        extra={"best_dev_score": self.best_dev_score_})
        return path

    @classmethod
    def from_checkpoint(cls, path) -> "DialogueEmotionClassifier":
        model, cfg, vocab, label_map, extra = load_checkpoint(path)
        est = cls()
        est.config_ = cfg
        est.label_map_ = label_map
        est.vocab_ = vocab
        est.model_ = model
        est.history_ = []
        est.best_dev_score_ = extra.get("best_dev_score")
        est.classes_ = np.array(label_map.names)
        return est
