"""convemo: emotion recognition in conversation with a contrastive +
generative training recipe on a from-scratch autodiff core."""

from .autodiff import Tensor, backward
from .config import RunConfig, load_config
from .data import Dialogue, LabelMap, Utterance, Vocab, build_vocab, load_corpus
from .errors import (
    ConfigError,
    DataError,
    DegenerateBatchError,
    DimensionError,
    NumericError,
)
from .estimator import DialogueEmotionClassifier
from .metrics import EvalReport, micro_f1_excluding, weighted_f1

__version__ = "0.1.0"

__all__ = [
    "Tensor",
    "backward",
    "RunConfig",
    "load_config",
    "Dialogue",
    "Utterance",
    "Vocab",
    "LabelMap",
    "build_vocab",
    "load_corpus",
    "ConfigError",
    "DataError",
    "DegenerateBatchError",
    "DimensionError",
    "NumericError",
    "DialogueEmotionClassifier",
    "EvalReport",
    "weighted_f1",
    "micro_f1_excluding",
    "__version__",
]
