"""Training and evaluation orchestration.

One window of consecutive utterances is one batch is one optimizer step.
Per window the loss is (1-a-b)*CE + a*SCL + b*Gen where a and b fall to
zero when a component is toggled off or unavailable (size-1 window), with
the freed weight reassigned to CE so the mix stays convex.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import Tensor, backward, concat_rows
from .config import RunConfig
from .context import DialogueTransformerParams, contextualize, init_dialogue_transformer
from .data import (
    Dialogue,
    LabelMap,
    Vocab,
    adjacent_pairs,
    build_vocab,
    encode_utterance,
    load_corpus,
    make_windows,
)
from .errors import DataError, NumericError
from .layers import named_tensors
from .metrics import EvalReport, eval_report
from .model import EncodedUtterance, SeqModelParams, encode, init_seq_model
from .objectives import (
    ClassifierHead,
    LossWeights,
    build_multiview,
    ce_loss,
    classify,
    gen_loss,
    init_classifier,
    scl_loss,
    total_loss,
)
from .optim import AdamWState, adamw_step, clip_global_norm, lr_at

logger = logging.getLogger(__name__)

ABLATION_ROWS = [
    ("full", {}),
    ("-Gen", {"use_gen": False}),
    ("-SCL", {"use_scl": False}),
    ("-Speaker", {"use_speaker": False}),
    ("-Gen-SCL", {"use_gen": False, "use_scl": False}),
    ("-SCL-Speaker", {"use_scl": False, "use_speaker": False}),
    ("-Gen-Speaker", {"use_gen": False, "use_speaker": False}),
    ("-Dialog-Trans", {"use_dialog_trans": False}),
]


@dataclass
class ModelParams:
    seq: SeqModelParams
    ctx: DialogueTransformerParams
    head: ClassifierHead


def init_model(vocab_size: int, num_classes: int, cfg: RunConfig,
               rng: np.random.Generator) -> ModelParams:
    return ModelParams(
        seq=init_seq_model(
            vocab_size,
            d_model=cfg.d_model,
            n_heads=cfg.n_heads,
            n_enc_layers=cfg.enc_layers,
            n_dec_layers=cfg.dec_layers,
            d_ff=cfg.d_ff,
            max_len=cfg.max_len,
            rng=rng,
        ),
        ctx=init_dialogue_transformer(
            cfg.d_model, cfg.n_heads, cfg.d_ff, cfg.window_size, rng,
            use_positions=cfg.context_positions,
        ),
        head=init_classifier(cfg.d_model, num_classes, rng),
    )


def param_list(model: ModelParams) -> list[tuple[str, Tensor]]:
    return list(named_tensors(model))


def snapshot_params(model: ModelParams) -> dict[str, np.ndarray]:
    return {name: t.data.copy() for name, t in param_list(model)}


def restore_params(model: ModelParams, snap: dict[str, np.ndarray]) -> None:
    for name, t in param_list(model):
        t.data = snap[name].copy()


def encode_window(model: ModelParams, window, vocab: Vocab, cfg: RunConfig):
    """Per-utterance encodings plus the contextualized window matrix."""
    encs = [
        encode(model.seq, encode_utterance(u, vocab, cfg.use_speaker, cfg.max_len))
        for u in window
    ]
    h = concat_rows([e.pooled for e in encs])
    h_ctx = contextualize(h, model.ctx, enabled=cfg.use_dialog_trans)
    labels = np.array([u.label for u in window], dtype=np.intp)
    return encs, h_ctx, labels


def window_loss(model: ModelParams, window, vocab: Vocab, cfg: RunConfig, diag: dict):
    """Total loss for one window plus its per-component breakdown."""
    encs, h_ctx, labels = encode_window(model, window, vocab, cfg)
    probs, preds = classify(h_ctx, model.head)
    ce = ce_loss(probs, labels, diag)

    scl_on = cfg.use_scl and len(window) >= 2
    gen_on = cfg.use_gen and len(window) >= 2
    if cfg.use_scl and not scl_on:
        diag["scl_skipped"] = diag.get("scl_skipped", 0) + 1
        logger.debug("window of size %d: SCL skipped", len(window))

    if scl_on:
        scl = scl_loss(build_multiview(h_ctx, labels), cfg.tau, cfg.scl_variant,
                       cfg.scl_normalize)
    else:
        scl = Tensor(0.0)
    if gen_on:
        pairs = [
            (encs[i], encode_utterance(nxt, vocab, cfg.use_speaker, cfg.max_len))
            for i, (_, nxt) in enumerate(adjacent_pairs(window))
        ]
        gen = gen_loss(pairs, model.seq)
    else:
        gen = Tensor(0.0)

    a = cfg.alpha if scl_on else 0.0
    b = cfg.beta if gen_on else 0.0
    total = total_loss(ce, scl, gen, LossWeights(a, b, cfg.tau))
    parts = {
        "ce": float(ce.data), "scl": float(scl.data), "gen": float(gen.data),
        "w_ce": 1.0 - a - b, "w_scl": a, "w_gen": b,
        "total": float(total.data),
        "preds": preds, "labels": labels,
    }
    return total, parts


def predict_corpus(model: ModelParams, dialogues: list[Dialogue], vocab: Vocab,
                   cfg: RunConfig):
    """Gold and predicted label ids over every utterance, in corpus order."""
    y_true, y_pred = [], []
    for dlg in dialogues:
        for window in make_windows(dlg, cfg.window_size):
            _, h_ctx, labels = encode_window(model, window, vocab, cfg)
            _, preds = classify(h_ctx, model.head)
            y_true.extend(int(v) for v in labels)
            y_pred.extend(int(v) for v in preds)
    return np.array(y_true), np.array(y_pred)


def evaluate_split(model: ModelParams, dialogues: list[Dialogue], vocab: Vocab,
                   cfg: RunConfig, label_map: LabelMap) -> EvalReport:
    y_true, y_pred = predict_corpus(model, dialogues, vocab, cfg)
    excluded = None
    if label_map.excluded is not None:
        excluded = (label_map.excluded, label_map.id_of(label_map.excluded))
    return eval_report(y_true, y_pred, label_map.num_classes, excluded)


def primary_score(report: EvalReport, label_map: LabelMap) -> float:
    """Dev-selection metric: micro-F1-excluding when the dataset defines an
    excluded label, weighted-average F1 otherwise."""
    if label_map.excluded is not None and report.micro_f1_excluding is not None:
        return report.micro_f1_excluding[1]
    return report.weighted_avg_f1


@dataclass
class TrainResult:
    model: ModelParams
    vocab: Vocab
    label_map: LabelMap
    cfg: RunConfig
    seed: int
    history: list[dict] = field(default_factory=list)
    best_dev_score: float | None = None
    best_epoch: int | None = None


def train_single(cfg: RunConfig, seed: int, train_dlgs: list[Dialogue],
                 dev_dlgs: list[Dialogue] | None, vocab: Vocab,
                 label_map: LabelMap) -> TrainResult:
    """One seeded training run; returns the best-dev model (final model when
    no dev split is given)."""
    rng = np.random.default_rng(seed)
    model = init_model(len(vocab), label_map.num_classes, cfg, rng)
    plist = param_list(model)
    windows = [w for dlg in train_dlgs for w in make_windows(dlg, cfg.window_size)]
    if not windows:
        raise DataError("training corpus produced no windows")

    total_steps = cfg.epochs * len(windows)
    state = AdamWState()
    result = TrainResult(model=model, vocab=vocab, label_map=label_map, cfg=cfg, seed=seed)
    best_snap = None
    step = 0

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(windows))
        diag: dict = {}
        sums = {k: 0.0 for k in
                ("total", "ce", "scl", "gen", "w_ce", "w_scl", "w_gen",
                 "contrib_ce", "contrib_scl", "contrib_gen", "weight_sum")}
        for wi in order:
            step += 1
            lr = lr_at(step, total_steps, cfg.warmup_ratio, cfg.lr)
            loss, parts = window_loss(model, windows[wi], vocab, cfg, diag)
            if not np.isfinite(loss.data):
                raise NumericError(f"non-finite loss at step {step}")
            node_grads = backward(loss)
            grads = {
                name: node_grads[t.node_id].data
                for name, t in plist if t.node_id in node_grads
            }
            clip_global_norm(grads, cfg.grad_clip)
            adamw_step(plist, grads, state, lr, weight_decay=cfg.weight_decay)
            for k in ("total", "ce", "scl", "gen", "w_ce", "w_scl", "w_gen"):
                sums[k] += parts[k]
            sums["contrib_ce"] += parts["w_ce"] * parts["ce"]
            sums["contrib_scl"] += parts["w_scl"] * parts["scl"]
            sums["contrib_gen"] += parts["w_gen"] * parts["gen"]
            sums["weight_sum"] += parts["w_ce"] + parts["w_scl"] + parts["w_gen"]

        n = len(windows)
        yt, yp = predict_corpus(model, train_dlgs, vocab, cfg)
        train_acc = float((yt == yp).mean())
        row = {
            "epoch": epoch,
            "loss": sums["total"] / n,
            "loss_ce": sums["ce"] / n,
            "loss_scl": sums["scl"] / n,
            "loss_gen": sums["gen"] / n,
            "w_ce": sums["w_ce"] / n,
            "w_scl": sums["w_scl"] / n,
            "w_gen": sums["w_gen"] / n,
            "contrib_ce": sums["contrib_ce"] / n,
            "contrib_scl": sums["contrib_scl"] / n,
            "contrib_gen": sums["contrib_gen"] / n,
            "weight_sum": sums["weight_sum"] / n,
            "lr": lr,
            "train_acc": train_acc,
            "ce_clamped": diag.get("ce_clamped", 0),
            "scl_skipped": diag.get("scl_skipped", 0),
        }
        if dev_dlgs:
            dev_rep = evaluate_split(model, dev_dlgs, vocab, cfg, label_map)
            score = primary_score(dev_rep, label_map)
            row["dev_score"] = score
            if result.best_dev_score is None or score > result.best_dev_score:
                result.best_dev_score = score
                result.best_epoch = epoch
                best_snap = snapshot_params(model)
        result.history.append(row)
        logger.info("epoch %d: loss %.4f train_acc %.3f dev %s",
                    epoch, row["loss"], train_acc, row.get("dev_score"))
        if cfg.early_stop_train_acc is not None and train_acc >= cfg.early_stop_train_acc:
            logger.info("early stop: train accuracy %.3f at epoch %d", train_acc, epoch)
            break

    if best_snap is not None:
        restore_params(model, best_snap)
    return result


def load_splits(cfg: RunConfig, label_map: LabelMap):
    if cfg.train_path is None:
        raise DataError("config has no train_path")
    train = load_corpus(cfg.train_path, label_map)
    dev = load_corpus(cfg.dev_path, label_map) if cfg.dev_path else None
    test = load_corpus(cfg.test_path, label_map) if cfg.test_path else None
    return train, dev, test


def dump_embeddings(model: ModelParams, dialogues: list[Dialogue], vocab: Vocab,
                    cfg: RunConfig, label_map: LabelMap) -> list[str]:
    """One TSV line per utterance: dialogue id, index, gold, prediction, and
    the d contextualized coordinates."""
    lines = []
    for dlg in dialogues:
        for window in make_windows(dlg, cfg.window_size):
            _, h_ctx, labels = encode_window(model, window, vocab, cfg)
            _, preds = classify(h_ctx, model.head)
            for u, gold, pred, coords in zip(window, labels, preds, h_ctx.data):
                cells = [dlg.dialogue_id, str(u.index_in_dialogue),
                         label_map.name_of(int(gold)), label_map.name_of(int(pred))]
                cells.extend(f"{v:.10g}" for v in coords)
                lines.append("\t".join(cells))
    return lines


def run_ablation(cfg: RunConfig, train_dlgs, dev_dlgs, vocab: Vocab,
                 label_map: LabelMap) -> list[dict]:
    """The eight-row toggle matrix, each row averaged over cfg.seeds.

    Per row the last training epoch's component weights and contributions
    are carried along so downstream checks can confirm that disabled
    components really contributed nothing.
    """
    rows = []
    for name, toggles in ABLATION_ROWS:
        row_cfg = cfg.replace(**toggles)
        scores, contribs = [], []
        for seed in cfg.seeds:
            res = train_single(row_cfg, seed, train_dlgs, dev_dlgs, vocab, label_map)
            last = res.history[-1]
            contribs.append(last)
            if res.best_dev_score is not None:
                scores.append(res.best_dev_score)
            else:
                scores.append(last["train_acc"])
        last = contribs[-1]
        rows.append({
            "name": name,
            "toggles": toggles,
            "seed_scores": scores,
            "mean_score": float(np.mean(scores)),
            "w_ce": last["w_ce"], "w_scl": last["w_scl"], "w_gen": last["w_gen"],
            "weight_sum": last["weight_sum"],
            "contrib_ce": last["contrib_ce"],
            "contrib_scl": last["contrib_scl"],
            "contrib_gen": last["contrib_gen"],
        })
    return rows


def write_history(path: Path, history: list[dict]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for row in history:
            fh.write(json.dumps(row) + "\n")
