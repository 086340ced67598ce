"""The attack loop: rank words, try candidates, keep the best perturbation.

One attacked sample costs exactly (n+1) target queries for importance
scoring, one masked-LM pass for candidates, and one target query per
candidate tried; the test suite asserts the ledger against that formula.
The candidate matrix is computed once from the original, unmasked sequence
and reused even after earlier words have been replaced.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

from .candidates import (
    FilterConfig,
    SubwordSearchConfig,
    load_antonyms,
    load_stopwords,
    single_word_candidates,
    subword_candidates,
)
from .errors import ConfigError
from .gateway import GatewaySession
from .importance import RankingMode, importance_scores, select_words
from .tokenization import SubwordAlignment, WordSequence, align_subwords, detokenize, split_words


class AttackStatus(str, Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    SKIPPED = "skipped"  # the target already misclassifies the original


class SimGate(str, Enum):
    POST_HOC = "post_hoc"  # evaluation-time filter (default)
    IN_LOOP = "in_loop"  # a flip below the threshold is rejected outright
    OFF = "off"


# Artifact defaults; the similarity thresholds are per-form (single text vs
# sentence pair) and resolved at attack time when not set explicitly.
DEFAULT_SIM_THRESHOLD_SINGLE = 0.4
DEFAULT_SIM_THRESHOLD_PAIR = 0.2


@dataclass(frozen=True)
class AttackConfig:
    k: int = 48
    epsilon: float = 1.0
    ranking_mode: RankingMode = RankingMode.MIR
    sim_threshold: float | None = None
    sim_gate: SimGate = SimGate.POST_HOC
    prob_threshold: float | None = None
    subword: SubwordSearchConfig = field(default_factory=SubwordSearchConfig)
    use_subword_attack: bool = True
    seed: int = 0
    max_target_queries: int | None = None
    use_antonym_filter: bool = False
    stopwords_path: str | None = None
    antonyms_path: str | None = None
    rescore_combinations: bool = False
    verify_success: bool = False

    def __post_init__(self):
        if self.k < 0:
            raise ConfigError(f"k must be >= 0, got {self.k}")
        if not 0.0 < self.epsilon <= 1.0:
            raise ConfigError(f"epsilon must be in (0, 1], got {self.epsilon}")
        if self.sim_threshold is not None and not -1.0 <= self.sim_threshold <= 1.0:
            raise ConfigError(f"sim_threshold outside [-1, 1]: {self.sim_threshold}")
        if self.max_target_queries is not None and self.max_target_queries < 1:
            raise ConfigError("max_target_queries must be >= 1")

    def resolved_sim_threshold(self, is_pair: bool) -> float:
        if self.sim_threshold is not None:
            return self.sim_threshold
        return DEFAULT_SIM_THRESHOLD_PAIR if is_pair else DEFAULT_SIM_THRESHOLD_SINGLE


@dataclass(frozen=True)
class Replacement:
    index: int
    old: str
    new: str


@dataclass(frozen=True)
class AttackOutcome:
    status: AttackStatus
    adversarial: WordSequence  # final sequence; best-effort on failure
    perturbed_indices: tuple[int, ...]
    target_queries: int
    mlm_queries: int
    similarity: float | None
    elapsed: float
    gold: int
    original_argmax: int
    final_argmax: int
    candidates_tried: int
    descent: tuple[float, ...]  # committed gold-label scores, original first
    replacements: tuple[Replacement, ...]
    budget_exhausted: bool


@lru_cache(maxsize=8)
def _filters_for(
    stopwords_path: str | None,
    antonyms_path: str | None,
    use_antonym_filter: bool,
    prob_threshold: float | None,
) -> FilterConfig:
    stopwords = load_stopwords(stopwords_path)
    antonyms = load_antonyms(antonyms_path) if use_antonym_filter else frozenset()
    return FilterConfig(stopwords, antonyms, use_antonym_filter, prob_threshold)


def derive_seed(global_seed: int, sample_id: str) -> int:
    """Stable per-sample seed; Python's hash() is salted, so use a digest."""
    digest = hashlib.sha256(f"{global_seed}:{sample_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def attack(sample, cfg: AttackConfig, session: GatewaySession) -> AttackOutcome:
    """Run the full word-substitution attack on one sample.

    ``sample`` is a :class:`mlmattack.samples.TextSample`; for pair tasks
    only the designated segment is segmented and perturbed, while both
    segments are always sent to the classifier.
    """
    started = time.perf_counter()
    vocab = session.vocab
    try:
        gold = session.label_map.resolve(sample.label)
    except KeyError as exc:
        raise ConfigError(f"sample {sample.id!r}: {exc.args[0]}") from exc
    attackable = sample.attackable_text()
    render = sample.render

    ws = split_words(attackable, lower=not vocab.cased)
    filters = _filters_for(
        cfg.stopwords_path, cfg.antonyms_path, cfg.use_antonym_filter, cfg.prob_threshold
    )

    state = {
        "original_argmax": 0,
        "final_argmax": 0,
        "candidates_tried": 0,
        "descent": (),
        "replacements": (),
        "budget_exhausted": False,
    }

    def finish(status, current, perturbed):
        similarity = None
        if session.has_similarity and status != AttackStatus.SKIPPED:
            similarity = session.similarity(detokenize(ws.words), detokenize(current))
        session.ledger.wall_time = time.perf_counter() - started
        ledger = session.ledger_snapshot()
        return AttackOutcome(
            status=status,
            adversarial=WordSequence(tuple(current), detokenize(current)),
            perturbed_indices=tuple(sorted(perturbed)),
            target_queries=ledger.target_queries,
            mlm_queries=ledger.mlm_queries,
            similarity=similarity,
            elapsed=ledger.wall_time,
            gold=gold,
            **state,
        )

    # Skip check; this classify doubles as o_y(S) for importance scoring.
    orig_logits = session.classify(render(ws.words))
    orig_argmax = orig_logits.argmax()
    state.update(
        original_argmax=orig_argmax,
        final_argmax=orig_argmax,
        descent=(orig_logits.score(gold),),
    )
    if orig_argmax != gold:
        return finish(AttackStatus.SKIPPED, list(ws.words), [])
    if len(ws) == 0:
        return finish(AttackStatus.FAILURE, list(ws.words), [])

    ranking = importance_scores(ws, gold, session, render=render, orig_logits=orig_logits)
    selected = select_words(
        ranking, cfg.epsilon, cfg.ranking_mode, seed=derive_seed(cfg.seed, sample.id)
    )

    alignment = align_subwords(ws, vocab)
    limit = session.gateway.max_positions
    usable = (limit - 2) if limit is not None else len(alignment.tokens)
    mlm_tokens = alignment.tokens
    topk = None
    if cfg.k >= 1 and selected:
        mlm_alignment = alignment
        if len(alignment.tokens) > usable:
            kept = tuple(s for s in alignment.spans if s[1] <= usable)
            mlm_tokens = alignment.tokens[:usable]
            mlm_alignment = SubwordAlignment(mlm_tokens, kept, alignment.vocab_id)
        topk = session.mlm_topk(mlm_alignment, cfg.k)

    sim_threshold = cfg.resolved_sim_threshold(sample.is_pair)
    current = list(ws.words)
    current_gold = orig_logits.score(gold)
    descent = [current_gold]
    perturbed: list[int] = []
    replacements: list[Replacement] = []
    tried = 0
    budget_exhausted = False

    def budget_left() -> bool:
        if cfg.max_target_queries is None:
            return True
        return session.ledger.target_queries < cfg.max_target_queries

    success_words = None
    success_argmax = None
    for index in selected:
        if budget_exhausted or success_words is not None:
            break
        start, end = alignment.span(index)
        t = end - start
        if topk is None or end > len(topk):
            continue  # no predictions for this word (K=0 or truncated away)
        if t == 1:
            cands = single_word_candidates(index, topk, alignment, filters, vocab, ws)
        else:
            if not cfg.use_subword_attack or t > cfg.subword.max_span:
                continue
            rescore = None
            if cfg.rescore_combinations:
                rescore = lambda ids, s=start: session.mlm_span_logprobs(
                    mlm_tokens, s, ids
                )
            search = SubwordSearchConfig(
                cfg.subword.max_span, cfg.subword.max_enumeration, cfg.k
            )
            cands = subword_candidates(
                index, topk, alignment, search, filters, vocab, ws, rescore=rescore
            )

        best_words = None
        best_score = None
        best_surface = None
        for cand in cands:
            if not budget_left():
                budget_exhausted = True
                break
            trial = list(current)
            trial[index] = cand.surface
            logits = session.classify(render(tuple(trial)))
            tried += 1
            if logits.argmax() != gold:
                if cfg.sim_gate == SimGate.IN_LOOP and session.has_similarity:
                    sim = session.similarity(detokenize(ws.words), detokenize(trial))
                    if sim < sim_threshold:
                        continue  # flip rejected by the in-loop gate
                success_words = trial
                success_argmax = logits.argmax()
                perturbed.append(index)
                replacements.append(Replacement(index, ws.words[index], cand.surface))
                break
            score = logits.score(gold)
            if best_score is None or score < best_score:
                best_words, best_score, best_surface = trial, score, cand.surface
        if success_words is not None:
            break
        # Algorithm acceptance test: commit only a strict improvement.
        if best_words is not None and best_score < current_gold:
            current = best_words
            current_gold = best_score
            descent.append(best_score)
            perturbed.append(index)
            replacements.append(Replacement(index, ws.words[index], best_surface))

    if success_words is not None:
        current = success_words
        status = AttackStatus.SUCCESS
        final_argmax = success_argmax
        if cfg.verify_success:
            check = session.classify(render(tuple(current)))
            final_argmax = check.argmax()
            if final_argmax == gold:  # only possible with a nondeterministic backend
                status = AttackStatus.FAILURE
    else:
        status = AttackStatus.FAILURE
        final_argmax = orig_argmax

    state.update(
        final_argmax=final_argmax,
        candidates_tried=tried,
        descent=tuple(descent),
        replacements=tuple(replacements),
        budget_exhausted=budget_exhausted,
    )
    return finish(status, current, perturbed)


def perturb_percentage(outcome: AttackOutcome, original: WordSequence) -> float:
    """Share of the original's words that were replaced, as a percentage."""
    if len(original) == 0 or outcome.status == AttackStatus.SKIPPED:
        return 0.0
    return 100.0 * len(outcome.perturbed_indices) / len(original)
