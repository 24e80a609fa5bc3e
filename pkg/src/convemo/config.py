"""Run configuration: one dataclass covering data, model, loss, optimizer,
ablation toggles, and output settings, loadable from a JSON file.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .data import LabelMap, label_map_for
from .errors import ConfigError
from .objectives import SCL_VARIANTS, LossWeights


@dataclass
class RunConfig:
    # data
    train_path: str | None = None
    dev_path: str | None = None
    test_path: str | None = None
    dataset: str = "meld"
    labels: list[str] | None = None
    excluded_label: str | None = None
    min_freq: int = 1

    # model dims
    d_model: int = 64
    n_heads: int = 4
    enc_layers: int = 2
    dec_layers: int = 2
    d_ff: int = 128
    max_len: int = 64

    # windowing: one window of consecutive utterances = one training batch
    window_size: int = 4

    # loss
    alpha: float = 0.2
    beta: float = 0.1
    tau: float = 0.07
    scl_variant: str = "paper-literal"
    scl_normalize: bool = True

    # optimizer
    lr: float = 3e-4
    warmup_ratio: float = 0.1
    epochs: int = 30
    weight_decay: float = 0.01
    grad_clip: float = 1.0

    # runs
    seeds: list[int] = field(default_factory=lambda: [0])
    early_stop_train_acc: float | None = None
    out_dir: str | None = None

    # ablation toggles
    use_gen: bool = True
    use_scl: bool = True
    use_speaker: bool = True
    use_dialog_trans: bool = True
    context_positions: bool = True

    def __post_init__(self):
        LossWeights(self.alpha, self.beta, self.tau)
        if self.scl_variant not in SCL_VARIANTS:
            raise ConfigError(f"scl_variant must be one of {SCL_VARIANTS}")
        if self.window_size < 2:
            raise ConfigError(f"window_size must be >= 2, got {self.window_size}")
        if self.d_model % self.n_heads != 0:
            raise ConfigError(f"n_heads ({self.n_heads}) must divide d_model ({self.d_model})")
        if not 0 <= self.warmup_ratio < 1:
            raise ConfigError(f"warmup_ratio must lie in [0, 1), got {self.warmup_ratio}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.max_len < 2:
            raise ConfigError(f"max_len must be >= 2, got {self.max_len}")
        if self.min_freq < 1:
            raise ConfigError(f"min_freq must be >= 1, got {self.min_freq}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.labels is None and self.excluded_label is not None:
            raise ConfigError("excluded_label requires an explicit labels list")

    @property
    def loss_weights(self) -> LossWeights:
        return LossWeights(self.alpha, self.beta, self.tau)

    def label_map(self) -> LabelMap:
        """Explicit labels win; otherwise the dataset's built-in label set."""
        if self.labels is not None:
            return LabelMap(self.labels, self.excluded_label)
        return label_map_for(self.dataset)

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def load_config(path) -> RunConfig:
    """Read a JSON config file; unknown keys are an error, not a silent no-op."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e.msg})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    return RunConfig(**raw)
