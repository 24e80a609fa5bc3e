"""Command-line surface: train, evaluate, ablate, dump-embeddings, data-stats.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure (non-finite loss or gradient).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_config
from .data import build_vocab, corpus_stats, label_map_for, load_corpus, LabelMap
from .errors import ConfigError, DataError, NumericError
from .trainer import (
    dump_embeddings,
    evaluate_split,
    load_splits,
    run_ablation,
    train_single,
    write_history,
)

logger = logging.getLogger(__name__)


def _out_dir(args, cfg: RunConfig | None = None) -> Path | None:
    if getattr(args, "out", None):
        return Path(args.out)
    if cfg is not None and cfg.out_dir:
        return Path(cfg.out_dir)
    return None


def _train_one_seed(cfg: RunConfig, seed: int, train_d, dev_d, test_d, vocab,
                    label_map, out: Path | None) -> dict:
    result = train_single(cfg, seed, train_d, dev_d, vocab, label_map)
    summary = {
        "seed": seed,
        "epochs_run": len(result.history),
        "final_train_acc": result.history[-1]["train_acc"],
        "best_dev_score": result.best_dev_score,
        "best_epoch": result.best_epoch,
    }
    if dev_d:
        summary["dev_report"] = evaluate_split(
            result.model, dev_d, vocab, cfg, label_map).to_dict()
    if test_d:
        summary["test_report"] = evaluate_split(
            result.model, test_d, vocab, cfg, label_map).to_dict()
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_history(out / "history.jsonl", result.history)
        save_checkpoint(out / "checkpoint.best", result.model, cfg, vocab,
                        label_map, extra={"seed": seed,
                                          "best_dev_score": result.best_dev_score,
                                          "best_epoch": result.best_epoch})
        (out / "metrics.json").write_text(json.dumps(summary, indent=2),
                                          encoding="utf-8")
    return summary


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seeds=[args.seed])
    out = _out_dir(args, cfg)
    label_map = cfg.label_map()
    train_d, dev_d, test_d = load_splits(cfg, label_map)
    vocab = build_vocab(train_d, cfg.min_freq)

    summaries = []
    for seed in cfg.seeds:
        seed_out = out if out is None or len(cfg.seeds) == 1 else out / f"seed_{seed}"
        summaries.append(_train_one_seed(cfg, seed, train_d, dev_d, test_d,
                                         vocab, label_map, seed_out))
    if len(summaries) == 1:
        payload = summaries[0]
    else:
        scores = [s["best_dev_score"] for s in summaries
                  if s["best_dev_score"] is not None]
        payload = {
            "seeds": cfg.seeds,
            "runs": summaries,
            "mean_dev_score": float(np.mean(scores)) if scores else None,
            "std_dev_score": float(np.std(scores)) if scores else None,
        }
        if out is not None:
            (out / "metrics.json").write_text(json.dumps(payload, indent=2),
                                              encoding="utf-8")
    print(json.dumps(payload, indent=2))
    return 0


def cmd_evaluate(args) -> int:
    model, cfg, vocab, label_map, _ = load_checkpoint(args.checkpoint)
    dialogues = load_corpus(args.data, label_map)
    report = evaluate_split(model, dialogues, vocab, cfg, label_map)
    out = _out_dir(args)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(report.to_json(), encoding="utf-8")
    print(report.to_json())
    return 0


def cmd_ablate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.replace(seeds=[args.seed])
    out = _out_dir(args, cfg)
    label_map = cfg.label_map()
    train_d, dev_d, _ = load_splits(cfg, label_map)
    vocab = build_vocab(train_d, cfg.min_freq)
    rows = run_ablation(cfg, train_d, dev_d, vocab, label_map)
    payload = json.dumps(rows, indent=2)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "ablation.json").write_text(payload, encoding="utf-8")
    print(payload)
    return 0


def cmd_dump_embeddings(args) -> int:
    model, cfg, vocab, label_map, _ = load_checkpoint(args.checkpoint)
    dialogues = load_corpus(args.data, label_map)
    lines = dump_embeddings(model, dialogues, vocab, cfg, label_map)
    out = _out_dir(args)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "embeddings.tsv").write_text("\n".join(lines) + "\n",
                                            encoding="utf-8")
    else:
        for line in lines:
            print(line)
    return 0


def cmd_data_stats(args) -> int:
    if args.labels:
        label_map = LabelMap(args.labels.split(","), args.excluded or None)
    else:
        label_map = label_map_for(args.dataset)
    corpus = load_corpus(args.data, label_map)
    stats = corpus_stats(corpus, label_map)
    payload = json.dumps(stats, indent=2)
    out = _out_dir(args)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "data_stats.json").write_text(payload, encoding="utf-8")
    print(payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="convemo",
        description="Contrastive + generative emotion recognition in conversation",
    )
    parser.add_argument("--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train per config, saving best-dev checkpoints")
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--seed", type=int, default=None, help="override config seeds")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on a corpus file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="JSONL corpus to score")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="run the 8-row ablation matrix")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("dump-embeddings",
                       help="write contextualized utterance vectors as TSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_dump_embeddings)

    p = sub.add_parser("data-stats", help="corpus counts per dialogue/utterance/class")
    p.add_argument("--data", required=True)
    p.add_argument("--dataset", default="meld")
    p.add_argument("--labels", default=None, help="comma-separated label names")
    p.add_argument("--excluded", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_data_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
