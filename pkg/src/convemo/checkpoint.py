"""Checkpoint container: every named parameter array plus a JSON metadata
block (config, vocabulary, label set, scores) inside one npz file.

Arrays stay float64 end to end, so save -> load -> forward is bit-identical.
The file is written through an explicit handle to keep the exact filename
(numpy would otherwise append .npz).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import RunConfig
from .data import LabelMap, Vocab
from .errors import DataError
from .trainer import ModelParams, init_model, param_list

FORMAT_VERSION = 1


def save_checkpoint(path, model: ModelParams, cfg: RunConfig, vocab: Vocab,
                    label_map: LabelMap, extra: dict | None = None) -> None:
    meta = {
        "format": FORMAT_VERSION,
        "config": cfg.to_dict(),
        "vocab": vocab.tokens,
        "labels": label_map.names,
        "excluded": label_map.excluded,
        "extra": extra or {},
    }
    arrays = {f"param:{name}": t.data for name, t in param_list(model)}
    blob = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=blob, **arrays)


def load_checkpoint(path):
    """Rebuild (model, cfg, vocab, label_map, extra) from a checkpoint file."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as z:
        if "__meta__" not in z:
            raise DataError(f"{path}: not a checkpoint (missing metadata)")
        meta = json.loads(bytes(z["__meta__"]))
        if meta.get("format") != FORMAT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint format {meta.get('format')}")
        cfg = RunConfig(**meta["config"])
        vocab = Vocab(meta["vocab"])
        label_map = LabelMap(meta["labels"], meta["excluded"])
        model = init_model(len(vocab), label_map.num_classes, cfg,
                           np.random.default_rng(0))
        expected = {f"param:{name}" for name, _ in param_list(model)}
        stored = {k for k in z.files if k != "__meta__"}
        if stored != expected:
            raise DataError(
                f"{path}: parameter set mismatch "
                f"(missing {sorted(expected - stored)[:3]}, "
                f"unexpected {sorted(stored - expected)[:3]})"
            )
        for name, t in param_list(model):
            arr = z[f"param:{name}"]
            if arr.shape != t.data.shape:
                raise DataError(
                    f"{path}: shape mismatch for {name}: {arr.shape} vs {t.data.shape}"
                )
            t.data = arr.astype(np.float64)
    return model, cfg, vocab, label_map, meta["extra"]
