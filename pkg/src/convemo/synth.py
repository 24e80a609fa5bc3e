"""Synthetic corpora for end-to-end checks.

Two generators: a cue-word corpus where each utterance contains a token
naming its own emotion (learnable without context), and a context corpus
where every other utterance is textually identical and its label is
determined by the preceding utterance (learnable only with the
dialogue-level layer).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

CUE_LABELS = ["happy", "angry", "sad", "calm"]
SPEAKERS = ["mia", "leo"]

_FILLERS = ["well", "i", "think", "today", "really", "was", "so", "it", "felt", "honestly"]

CONTEXT_LABELS = ["bright", "dark"]
CONTEXT_CUES = {"bright": "sun", "dark": "rain"}
AMBIGUOUS_TEXT = "and it goes on"


def make_cue_corpus(n_dialogues: int = 40, utts_per_dialogue: int = 5,
                    n_classes: int = 4, seed: int = 0) -> list[dict]:
    """Dialogues whose utterances each contain their own label word as a cue."""
    if not 2 <= n_classes <= len(CUE_LABELS):
        raise ValueError(f"n_classes must lie in [2, {len(CUE_LABELS)}]")
    rng = np.random.default_rng(seed)
    labels = CUE_LABELS[:n_classes]
    dialogues = []
    for d in range(n_dialogues):
        utts = []
        for i in range(utts_per_dialogue):
            label = labels[int(rng.integers(n_classes))]
            words = list(rng.choice(_FILLERS, size=int(rng.integers(2, 5)), replace=True))
            words.insert(int(rng.integers(len(words) + 1)), label)
            utts.append({
                "speaker": SPEAKERS[i % 2],
                "text": " ".join(words),
                "label": label,
            })
        dialogues.append({"dialogue_id": f"cue-{d}", "utterances": utts})
    return dialogues


def make_context_corpus(n_dialogues: int = 24, seed: int = 0) -> list[dict]:
    """Dialogues of four utterances in two (cue, echo) segments.

    Cue utterances name sun or rain and carry the matching label. Echo
    utterances all share the exact same text; their label copies the
    preceding cue's, so only context can resolve them.
    """
    rng = np.random.default_rng(seed)
    dialogues = []
    for d in range(n_dialogues):
        utts = []
        for seg in range(2):
            label = CONTEXT_LABELS[int(rng.integers(2))]
            cue = CONTEXT_CUES[label]
            lead = list(rng.choice(_FILLERS, size=2, replace=True))
            utts.append({
                "speaker": SPEAKERS[len(utts) % 2],
                "text": f"{lead[0]} the {cue} {lead[1]}",
                "label": label,
            })
            utts.append({
                "speaker": SPEAKERS[len(utts) % 2],
                "text": AMBIGUOUS_TEXT,
                "label": label,
            })
        dialogues.append({"dialogue_id": f"ctx-{d}", "utterances": utts})
    return dialogues


def write_jsonl(records: list[dict], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path
