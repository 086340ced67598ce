"""Word importance scoring by mask-substitution logit difference.

A word's importance is the drop in the target model's gold-label score when
the word is replaced by the mask token.  The whole word is replaced with a
single [MASK] regardless of how many sub-word pieces it has, which keeps the
query count at exactly n+1 for an n-word input.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .errors import ConfigError, EmptyInput
from .gateway import GatewaySession, Logits, SampleText
from .tokenization import MASK_TOKEN, SPECIAL_TOKENS, WordSequence, is_punctuation

EXCLUDED_SCORE = float("-inf")


class RankingMode(str, Enum):
    MIR = "mir"  # most important first
    LIR = "lir"  # least important first (ablation)
    RANDOM = "random"  # seeded shuffle (ablation)


@dataclass(frozen=True)
class ImportanceEntry:
    index: int
    score: float


@dataclass(frozen=True)
class ImportanceList:
    """Entries sorted by descending score; ties broken by ascending index."""

    entries: tuple[ImportanceEntry, ...]
    gold: int

    def __len__(self) -> int:
        return len(self.entries)


RenderFn = Callable[[tuple[str, ...]], SampleText]


def _default_render(words: tuple[str, ...]) -> str:
    return " ".join(words)


def importance_scores(
    ws: WordSequence,
    gold: int,
    session: GatewaySession,
    render: RenderFn | None = None,
    orig_logits: Logits | None = None,
) -> ImportanceList:
    """Score every word of ``ws`` against the target model.

    Consumes exactly n+1 classify calls (n masked variants plus one for the
    unmodified input); pass ``orig_logits`` to reuse an already-classified
    original and spend only n.  ``render`` maps a word tuple to the classify
    input, which lets pair tasks keep the untouched segment attached.

    Words that are pure punctuation or special tokens keep their classify
    call but are pinned to -inf so selection never picks them.
    """
    if len(ws) == 0:
        raise EmptyInput("cannot score an empty word sequence")
    render = render or _default_render
    if orig_logits is None:
        orig_logits = session.classify(render(ws.words))
    base = orig_logits.score(gold)

    entries = []
    for i, word in enumerate(ws.words):
        masked = ws.words[:i] + (MASK_TOKEN,) + ws.words[i + 1 :]
        score = base - session.classify(render(masked)).score(gold)
        if word in SPECIAL_TOKENS or is_punctuation(word):
            score = EXCLUDED_SCORE
        entries.append(ImportanceEntry(i, score))

    entries.sort(key=lambda e: (-e.score, e.index))
    return ImportanceList(tuple(entries), gold)


def select_words(
    il: ImportanceList,
    epsilon: float,
    mode: RankingMode,
    seed: int | None = None,
) -> list[int]:
    """Pick the word indices to attack, in attack order.

    MIR walks the descending importance list, LIR the ascending one, RANDOM
    a seeded uniform shuffle; each is truncated to ceil(epsilon * n).
    Excluded (-inf) entries are never selected.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ConfigError(f"epsilon must be in (0, 1], got {epsilon}")
    budget = math.ceil(epsilon * len(il.entries))
    eligible = [e for e in il.entries if e.score != EXCLUDED_SCORE]
    if mode == RankingMode.MIR:
        ordered = eligible
    elif mode == RankingMode.LIR:
        ordered = sorted(eligible, key=lambda e: (e.score, e.index))
    elif mode == RankingMode.RANDOM:
        if seed is None:
            raise ConfigError("RANDOM ranking requires a seed")
        ordered = list(eligible)
        random.Random(seed).shuffle(ordered)
    else:  # pragma: no cover
        raise ConfigError(f"unknown ranking mode {mode}")
    return [e.index for e in ordered[:budget]]
