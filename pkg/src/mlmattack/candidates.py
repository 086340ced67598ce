"""Replacement candidates from the masked-LM's per-position predictions.

Single-piece words read their candidates straight off the prediction row.
Multi-piece words enumerate combinations of the per-position predictions
(beam-capped when the full product is too large), rank them by perplexity,
and decode the winners back to words.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Sequence

from .errors import SpanTooLong
from .gateway import MlmTopK
from .tokenization import (
    CONTINUATION_PREFIX,
    SPECIAL_TOKENS,
    SubwordAlignment,
    Vocabulary,
    WordSequence,
    is_punctuation,
)

# The bundled stopword list is part of the reproducibility contract; refuse
# to run with a silently modified copy.
STOPWORDS_SHA256 = "019f104ba2ed07436d05f9cdd3383034ad66014edc27fc651f837e1a038b6451"


@dataclass(frozen=True)
class Candidate:
    """One replacement word: log-prob score for single pieces, negative
    perplexity for decoded combinations."""

    surface: str
    score: float
    origin: str  # "single" | "subword"


@dataclass(frozen=True)
class FilterConfig:
    stopwords: frozenset[str] = frozenset()
    antonym_pairs: frozenset[frozenset[str]] = frozenset()
    use_antonym_filter: bool = False
    prob_threshold: float | None = None  # log-prob cutoff

    def is_antonym(self, a: str, b: str) -> bool:
        return frozenset((a.lower(), b.lower())) in self.antonym_pairs


@dataclass(frozen=True)
class SubwordSearchConfig:
    max_span: int = 4
    max_enumeration: int = 4096
    k: int = 48

    def __post_init__(self):
        assert self.max_span >= 1 and self.max_enumeration >= 1


def default_stopwords_path() -> Path:
    return Path(str(resources.files("mlmattack").joinpath("data/stopwords.txt")))


def default_antonyms_path() -> Path:
    return Path(str(resources.files("mlmattack").joinpath("data/antonyms.tsv")))


def load_stopwords(path=None) -> frozenset[str]:
    """Load a one-word-per-line stopword file; the bundled default is
    checksum-verified."""
    verify = path is None
    path = Path(path) if path is not None else default_stopwords_path()
    raw = path.read_bytes()
    if verify:
        digest = hashlib.sha256(raw).hexdigest()
        if digest != STOPWORDS_SHA256:
            raise ValueError(
                f"bundled stopword list checksum mismatch: {digest}"
            )
    return frozenset(
        line.strip() for line in raw.decode("utf-8").splitlines() if line.strip()
    )


def load_antonyms(path=None) -> frozenset[frozenset[str]]:
    """Load tab-separated unordered antonym pairs."""
    path = Path(path) if path is not None else default_antonyms_path()
    pairs = set()
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        a, b = line.split("\t")
        pairs.add(frozenset((a.strip().lower(), b.strip().lower())))
    return frozenset(pairs)


def combination_perplexity(logprobs: Sequence[float]) -> float:
    """Exponentiated negative mean log-probability; lower is better."""
    return math.exp(-sum(logprobs) / len(logprobs))


def _passes_filters(surface: str, original: str, filters: FilterConfig) -> bool:
    lowered = surface.lower()
    if lowered == original.lower():
        return False
    if lowered in filters.stopwords:
        return False
    if filters.use_antonym_filter and filters.is_antonym(surface, original):
        return False
    return True


def single_word_candidates(
    word_index: int,
    topk: MlmTopK,
    alignment: SubwordAlignment,
    filters: FilterConfig,
    vocab: Vocabulary,
    ws: WordSequence,
) -> list[Candidate]:
    """Candidates for a word that is a single vocabulary token.

    Keeps the prediction row's descending log-prob order; drops continuation
    pieces, special tokens, punctuation, stopwords, the original word, its
    antonyms (when enabled) and anything under the probability threshold.
    """
    start, end = alignment.span(word_index)
    assert end - start == 1, "single-word path requires a span of length 1"
    original = ws.words[word_index]
    out = []
    for token_id, logprob in topk.row(start):
        if filters.prob_threshold is not None and logprob < filters.prob_threshold:
            continue
        surface = vocab.decode(token_id)
        if surface.startswith(CONTINUATION_PREFIX) or surface in SPECIAL_TOKENS:
            continue
        if is_punctuation(surface) or not surface or " " in surface:
            continue
        if not _passes_filters(surface, original, filters):
            continue
        out.append(Candidate(surface, logprob, "single"))
    return out


def _decode_combination(piece_ids: Sequence[int], vocab: Vocabulary) -> str | None:
    """Join sub-word pieces back into one word; None when the combination
    does not form a single well-shaped word."""
    pieces = [vocab.decode(i) for i in piece_ids]
    if any(p in SPECIAL_TOKENS for p in pieces):
        return None
    if pieces[0].startswith(CONTINUATION_PREFIX):
        return None
    if any(not p.startswith(CONTINUATION_PREFIX) for p in pieces[1:]):
        return None  # a fresh word-start piece would decode to multiple words
    surface = pieces[0] + "".join(p[len(CONTINUATION_PREFIX) :] for p in pieces[1:])
    if not surface or " " in surface or is_punctuation(surface):
        return None
    return surface


def _enumerate_combinations(
    rows: list[list[tuple[int, float]]], cap: int
) -> list[tuple[tuple[int, ...], tuple[float, ...]]]:
    """All cross-position combinations, or the ``cap`` best by summed
    log-prob (beam expansion) when the full product is larger.

    Ranking by summed log-prob is order-equivalent to ranking by perplexity
    over a fixed span length, so the beam never discards a combination that
    full enumeration would have kept.
    """
    total = 1
    for row in rows:
        total *= max(len(row), 1)
        if total > cap:
            break
    beam: list[tuple[tuple[int, ...], tuple[float, ...], float]] = [((), (), 0.0)]
    for row in rows:
        grown = [
            (ids + (tid,), lps + (lp,), acc + lp)
            for ids, lps, acc in beam
            for tid, lp in row
        ]
        if total > cap and len(grown) > cap:
            grown.sort(key=lambda item: (-item[2], item[0]))
            grown = grown[:cap]
        beam = grown
    return [(ids, lps) for ids, lps, _ in beam]


RescoreFn = Callable[[tuple[int, ...]], Sequence[float]]


def subword_candidates(
    word_index: int,
    topk: MlmTopK,
    alignment: SubwordAlignment,
    cfg: SubwordSearchConfig,
    filters: FilterConfig,
    vocab: Vocabulary,
    ws: WordSequence,
    rescore: RescoreFn | None = None,
) -> list[Candidate]:
    """Candidates for a word split into several sub-word pieces.

    Combinations of the per-position predictions are scored by perplexity
    from the original single MLM pass; ``rescore`` swaps in an in-context
    log-prob lookup at one extra MLM pass per combination.  Returns at most
    ``cfg.k`` candidates by ascending perplexity, ties broken by token ids.
    """
    start, end = alignment.span(word_index)
    t = end - start
    if t == 1:
        return single_word_candidates(word_index, topk, alignment, filters, vocab, ws)
    if t > cfg.max_span:
        raise SpanTooLong(f"span of {t} pieces exceeds the cap of {cfg.max_span}")

    original = ws.words[word_index]
    rows = [topk.row(p) for p in range(start, end)]
    scored: list[tuple[float, tuple[int, ...], str, float]] = []
    for ids, lps in _enumerate_combinations(rows, cfg.max_enumeration):
        surface = _decode_combination(ids, vocab)
        if surface is None or not _passes_filters(surface, original, filters):
            continue
        if rescore is not None:
            lps = tuple(rescore(ids))
        mean_lp = sum(lps) / len(lps)
        if filters.prob_threshold is not None and mean_lp < filters.prob_threshold:
            continue
        scored.append((combination_perplexity(lps), ids, surface, mean_lp))

    scored.sort(key=lambda item: (item[0], item[1]))
    out, seen = [], set()
    for ppl, _ids, surface, _mean in scored:
        if surface in seen:
            continue
        seen.add(surface)
        out.append(Candidate(surface, -ppl, "subword"))
        if len(out) >= cfg.k:
            break
    return out
