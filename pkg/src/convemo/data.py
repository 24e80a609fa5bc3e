"""Corpus ingestion, vocabulary, tokenization, and window batching.

The canonical corpus format is JSONL, one dialogue per line:

    {"dialogue_id": "d0", "utterances": [
        {"speaker": "joey", "text": "hi there", "label": "joy"}, ...]}

Label strings must belong to the dataset's label map. Converters from the
benchmark-specific CSV layouts are external; this module only reads JSONL.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DataError

BOS, EOS, PAD, UNK = "<s>", "</s>", "<pad>", "<unk>"
RESERVED = (BOS, EOS, PAD, UNK)
BOS_ID, EOS_ID, PAD_ID, UNK_ID = 0, 1, 2, 3

SPEAKER_SEP = ":"

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def tokenize(text: str) -> list[str]:
    """Lowercased word / single-punctuation tokens."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Utterance:
    speaker: str
    text: str
    label: int
    dialogue_id: str
    index_in_dialogue: int


@dataclass(frozen=True)
class Dialogue:
    dialogue_id: str
    utterances: tuple[Utterance, ...]

    def __len__(self) -> int:
        return len(self.utterances)


class LabelMap:
    """Emotion-name <-> id mapping, with an optional excluded label.

    Ids are contiguous from 0 in the order given. The excluded label (e.g.
    DailyDialog's "neutral") marks the class dropped from micro-F1.
    """

    def __init__(self, names, excluded: str | None = None):
        self.names = list(names)
        if len(set(self.names)) != len(self.names):
            raise ConfigError("duplicate label names")
        if excluded is not None and excluded not in self.names:
            raise ConfigError(f"excluded label {excluded!r} not in label set")
        self.excluded = excluded
        self._ids = {name: i for i, name in enumerate(self.names)}

    @property
    def num_classes(self) -> int:
        return len(self.names)

    def id_of(self, name: str) -> int:
        try:
            return self._ids[name]
        except KeyError:
            raise DataError(f"unknown label name {name!r}; expected one of {self.names}") from None

    def name_of(self, label_id: int) -> str:
        return self.names[label_id]


BUILTIN_LABEL_MAPS = {
    "meld": (["anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise"], None),
    "emorynlp": (["joyful", "neutral", "powerful", "mad", "sad", "scared", "peaceful"], None),
    "dailydialog": (
        ["neutral", "happiness", "surprise", "anger", "disgust", "fear", "sadness"],
        "neutral",
    ),
    "iemocap": (["excited", "neutral", "frustrated", "sad", "happy", "angry"], None),
}


def label_map_for(dataset: str) -> LabelMap:
    try:
        names, excluded = BUILTIN_LABEL_MAPS[dataset.lower()]
    except KeyError:
        raise ConfigError(
            f"unknown dataset {dataset!r}; known: {sorted(BUILTIN_LABEL_MAPS)}"
        ) from None
    return LabelMap(names, excluded)


def dialogue_from_record(rec: dict, label_map: LabelMap, where: str = "record") -> Dialogue:
    """Build a Dialogue from one corpus-format dict; `where` tags errors."""
    try:
        did = str(rec["dialogue_id"])
        raw_utts = rec["utterances"]
    except (KeyError, TypeError):
        raise DataError(f"{where}: missing dialogue_id/utterances") from None
    if not raw_utts:
        raise DataError(f"{where}: dialogue {did!r} has no utterances")
    utts = []
    for i, u in enumerate(raw_utts):
        try:
            speaker, text, label_name = u["speaker"], u["text"], u["label"]
        except (KeyError, TypeError):
            raise DataError(f"{where}: utterance {i} missing speaker/text/label") from None
        utts.append(Utterance(
            speaker=str(speaker),
            text=str(text),
            label=label_map.id_of(str(label_name)),
            dialogue_id=did,
            index_in_dialogue=i,
        ))
    return Dialogue(dialogue_id=did, utterances=tuple(utts))


def load_corpus(path, label_map: LabelMap) -> list[Dialogue]:
    """Parse a JSONL corpus file into dialogues, in file order."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    dialogues = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: malformed JSON line ({e.msg})") from None
            dialogues.append(dialogue_from_record(rec, label_map, where=f"{path}:{lineno}"))
    return dialogues


@dataclass
class Vocab:
    """Token <-> id maps with reserved ids 0..3 for the special tokens."""

    tokens: list[str] = field(default_factory=lambda: list(RESERVED))

    def __post_init__(self):
        if self.tokens[:4] != list(RESERVED):
            raise ConfigError("vocab must start with the reserved tokens")
        self._ids = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self._ids) != len(self.tokens):
            raise ConfigError("vocab contains duplicate tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self._ids.get(token, UNK_ID)

    def decode(self, ids) -> list[str]:
        return [self.tokens[i] for i in ids]


def build_vocab(corpus: list[Dialogue], min_freq: int = 1) -> Vocab:
    """Frequency-thresholded vocabulary over speaker, separator, and text tokens.

    Id order is deterministic: frequency descending, then lexicographic.
    """
    if not corpus:
        raise ConfigError("cannot build a vocabulary from an empty corpus")
    counts = Counter()
    for dlg in corpus:
        for u in dlg.utterances:
            counts.update(tokenize(u.speaker))
            counts[SPEAKER_SEP] += 1
            counts.update(tokenize(u.text))
    kept = [tok for tok, c in counts.items() if c >= min_freq]
    kept.sort(key=lambda tok: (-counts[tok], tok))
    return Vocab(list(RESERVED) + kept)


def encode_utterance(u: Utterance, vocab: Vocab, use_speaker: bool, max_len: int = 64) -> list[int]:
    """Token ids for one utterance, optionally spliced with its speaker.

    Frame: [<s>, speaker tokens, ":", text tokens, </s>]; the speaker block
    is dropped when use_speaker is off. Truncation keeps the final </s>.
    """
    body: list[str] = []
    if use_speaker:
        body.extend(tokenize(u.speaker))
        body.append(SPEAKER_SEP)
    body.extend(tokenize(u.text))
    ids = [BOS_ID] + [vocab.id_of(tok) for tok in body] + [EOS_ID]
    if len(ids) > max_len:
        ids = ids[: max_len - 1] + [EOS_ID]
    return ids


def make_windows(dialogue: Dialogue, window_size: int) -> list[tuple[Utterance, ...]]:
    """Non-overlapping consecutive chunks of at most `window_size` utterances."""
    if window_size < 2:
        raise ConfigError(
            f"window size must be >= 2 (got {window_size}); "
            "a single-utterance window has no contrastive candidates"
        )
    utts = dialogue.utterances
    return [utts[i:i + window_size] for i in range(0, len(utts), window_size)]


def adjacent_pairs(utterances) -> list[tuple[Utterance, Utterance]]:
    """All (u_t, u_{t+1}) pairs in order; m utterances give m-1 pairs."""
    return list(zip(utterances[:-1], utterances[1:]))


def corpus_stats(corpus: list[Dialogue], label_map: LabelMap) -> dict:
    per_class = {name: 0 for name in label_map.names}
    n_utts = 0
    for dlg in corpus:
        n_utts += len(dlg)
        for u in dlg.utterances:
            per_class[label_map.name_of(u.label)] += 1
    return {
        "num_dialogues": len(corpus),
        "num_utterances": n_utts,
        "num_classes": label_map.num_classes,
        "per_class": per_class,
    }
