"""A small sentiment world with two redundant label signals.

Every sentence follows one template:

    the {noun} {v1} and {v2} and {v3} when the {subject} was {adjective}

Both the trio of reaction verbs and the closing adjective can carry the
label.  The *mixed-context* corpus draws the verbs independently of the
label, so a model trained on it can only rely on the adjective; the
*consistent* corpus aligns both signals, which is the regime used for
attack evaluation and for harvesting adversarial training data.  That
split is what makes adversarial fine-tuning measurable: a model that
learned only the fragile adjective cue can be retrained to lean on the
redundant context instead.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

POSITIVE_VERBS = ("cheered", "smiled", "laughed")
NEGATIVE_VERBS = ("groaned", "frowned", "yawned")
POSITIVE_ADJECTIVES = ("wonderful", "superb", "delightful", "charming")
NEGATIVE_ADJECTIVES = ("awful", "boring", "dreadful", "tedious")
NOUNS = ("crowd", "audience", "critic", "viewer", "family", "student")
SUBJECTS = ("film", "show", "play", "story", "script", "acting")
GLUE = ("the", "and", "when", "was")

LABELS = {"negative": 0, "positive": 1}

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
CLS_TOKEN = "[CLS]"
SEP_TOKEN = "[SEP]"
MASK_TOKEN = "[MASK]"
SPECIALS = (PAD_TOKEN, UNK_TOKEN, CLS_TOKEN, SEP_TOKEN, MASK_TOKEN)

# Template: "the N v1 and v2 and v3 when the S was ADJ" = 12 words + [CLS]/[SEP].
MAX_POSITIONS = 16


@dataclass(frozen=True)
class WorldSample:
    id: str
    label: str
    text: str

    def to_json(self) -> dict:
        return {"id": self.id, "label": self.label, "text": self.text}


def vocabulary() -> list[str]:
    """Every surface word as a single token, specials first."""
    words: list[str] = []
    for group in (
        GLUE,
        NOUNS,
        SUBJECTS,
        POSITIVE_VERBS,
        NEGATIVE_VERBS,
        POSITIVE_ADJECTIVES,
        NEGATIVE_ADJECTIVES,
    ):
        for word in group:
            if word not in words:
                words.append(word)
    return list(SPECIALS) + words


def _sentence(noun: str, verbs: Sequence[str], subject: str, adjective: str) -> str:
    v1, v2, v3 = verbs
    return f"the {noun} {v1} and {v2} and {v3} when the {subject} was {adjective}"


def mixed_context_corpus(n: int, seed: int = 0, id_prefix: str = "m") -> list[WorldSample]:
    """Verbs drawn from both polarities, independent of the label.

    The adjective is the only reliable cue, so a classifier fit here keys
    on it alone and treats the verbs as noise.
    """
    rng = random.Random(seed)
    out = []
    for i in range(n):
        positive = i % 2 == 0
        adjective = rng.choice(POSITIVE_ADJECTIVES if positive else NEGATIVE_ADJECTIVES)
        verbs = rng.sample(POSITIVE_VERBS + NEGATIVE_VERBS, 3)
        out.append(
            WorldSample(
                id=f"{id_prefix}{i:04d}",
                label="positive" if positive else "negative",
                text=_sentence(rng.choice(NOUNS), verbs, rng.choice(SUBJECTS), adjective),
            )
        )
    return out


def consistent_corpus(
    n: int, seed: int = 0, id_prefix: str = "c", verb_noise: float = 0.0
) -> list[WorldSample]:
    """Verbs and adjective all agree with the label.

    With ``verb_noise`` > 0, that fraction of sentences gets one randomly
    chosen verb slot flipped to the opposite polarity.  The verb majority
    still matches the label in every sentence, but no single slot is fully
    predictive on its own, so a model trained here cannot shortcut on one
    position and has to aggregate the redundant cue.
    """
    rng = random.Random(seed)
    out = []
    for i in range(n):
        positive = i % 2 == 0
        adjective = rng.choice(POSITIVE_ADJECTIVES if positive else NEGATIVE_ADJECTIVES)
        verbs = rng.sample(POSITIVE_VERBS if positive else NEGATIVE_VERBS, 3)
        if verb_noise > 0.0 and rng.random() < verb_noise:
            slot = rng.randrange(3)
            verbs[slot] = rng.choice(NEGATIVE_VERBS if positive else POSITIVE_VERBS)
        out.append(
            WorldSample(
                id=f"{id_prefix}{i:04d}",
                label="positive" if positive else "negative",
                text=_sentence(rng.choice(NOUNS), verbs, rng.choice(SUBJECTS), adjective),
            )
        )
    return out


def probe_sentences(n: int, seed: int = 7) -> list[str]:
    """Sentences for export parity checks, drawn from the consistent regime."""
    return [s.text for s in consistent_corpus(n, seed=seed, id_prefix="p")]


def write_corpus(samples: Iterable[WorldSample], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as handle:
        for sample in samples:
            handle.write(json.dumps(sample.to_json(), sort_keys=True) + "\n")
