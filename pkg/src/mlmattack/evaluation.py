"""Corpus-level attack runs: metrics, ablations, transfer, training export.

Metric populations follow one fixed convention, echoed in every report:
perturbation percentage and similarity are averaged over gated successful
attacks only, query counts over all non-skipped samples, and runtime over
all samples.  Accuracy identities are checked with exact rational
arithmetic over the underlying integer counts.
"""

from __future__ import annotations

import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .engine import AttackConfig, AttackOutcome, AttackStatus, SimGate, attack
from .errors import LabelMapMismatch
from .gateway import LabelMap, ModelGateway
from .importance import RankingMode
from .samples import TextSample, read_jsonl, write_jsonl


class AblationDimension(str, Enum):
    K_SWEEP = "k_sweep"
    RANKING_MODES = "ranking_modes"
    SUBWORD_TOGGLE = "subword_toggle"
    PROB_THRESHOLD = "prob_threshold"


@dataclass(frozen=True)
class SampleRecord:
    """Everything needed to re-verify the metrics for one sample offline."""

    id: str
    status: str
    gated: bool  # success that also passed the similarity gate
    gold: int
    gold_label: str
    original_argmax: int
    final_argmax: int
    original: dict
    adversarial: dict
    perturbed_indices: tuple[int, ...]
    replacements: tuple[dict, ...]
    perturb_percent: float
    similarity: float | None
    target_queries: int
    mlm_queries: int
    candidates_tried: int
    budget_exhausted: bool
    descent: tuple[float, ...]

    def to_json(self) -> dict:
        record = asdict(self)
        record["perturbed_indices"] = list(self.perturbed_indices)
        record["replacements"] = list(self.replacements)
        record["descent"] = list(self.descent)
        return record

    @classmethod
    def from_json(cls, record: dict) -> "SampleRecord":
        data = dict(record)
        data["perturbed_indices"] = tuple(data["perturbed_indices"])
        data["replacements"] = tuple(data["replacements"])
        data["descent"] = tuple(data["descent"])
        return cls(**data)

    def adversarial_sample(self) -> TextSample:
        return TextSample.from_json(self.adversarial)


@dataclass(frozen=True)
class EvaluationReport:
    n_samples: int
    skipped_count: int
    originally_correct: int
    raw_success_count: int
    gated_success_count: int
    avg_perturb_pct: float | None
    avg_similarity: float | None
    avg_target_queries: float | None
    avg_mlm_queries: float | None
    avg_runtime_s: float | None
    config_echo: dict

    def __post_init__(self):
        assert 0 <= self.skipped_count <= self.n_samples
        assert 0 <= self.gated_success_count <= self.raw_success_count
        assert self.raw_success_count <= self.originally_correct

    @property
    def original_accuracy(self) -> float | None:
        if self.n_samples == 0:
            return None
        return self.originally_correct / self.n_samples

    @property
    def attacked_accuracy(self) -> float | None:
        if self.n_samples == 0:
            return None
        return (self.originally_correct - self.gated_success_count) / self.n_samples

    @property
    def success_rate(self) -> float | None:
        if self.originally_correct == 0:
            return None
        return self.gated_success_count / self.originally_correct

    def metric_identity_exact(self) -> bool:
        """attacked + success_rate * original == original, in exact rationals."""
        if self.n_samples == 0 or self.originally_correct == 0:
            return True  # the identity is vacuous without defined rates
        total = self.n_samples
        correct = self.originally_correct
        flipped = self.gated_success_count
        attacked = Fraction(correct - flipped, total)
        original = Fraction(correct, total)
        success = Fraction(flipped, correct)
        return attacked + success * original == original

    def to_json(self, include_timing: bool = True) -> dict:
        record = {
            "n_samples": self.n_samples,
            "skipped_count": self.skipped_count,
            "originally_correct": self.originally_correct,
            "raw_success_count": self.raw_success_count,
            "gated_success_count": self.gated_success_count,
            "original_accuracy": self.original_accuracy,
            "attacked_accuracy": self.attacked_accuracy,
            "success_rate": self.success_rate,
            "avg_perturb_pct": self.avg_perturb_pct,
            "avg_similarity": self.avg_similarity,
            "avg_target_queries": self.avg_target_queries,
            "avg_mlm_queries": self.avg_mlm_queries,
            "config_echo": self.config_echo,
            "populations": {
                "perturb_pct": "gated successes",
                "similarity": "gated successes",
                "queries": "non-skipped samples",
                "runtime": "all samples",
            },
        }
        if include_timing:
            record["avg_runtime_s"] = self.avg_runtime_s
        return record


@dataclass(frozen=True)
class EvaluationResult:
    report: EvaluationReport
    records: tuple[SampleRecord, ...]
    timings: dict[str, float]  # sample id -> seconds, kept out of the records
    label_map: LabelMap
    wall_time_s: float


@dataclass(frozen=True)
class TransferReport:
    n_transferred: int
    still_correct: int
    per_sample: dict[str, bool]  # adversarial id -> correct on the new target

    @property
    def attacked_accuracy(self) -> float | None:
        if self.n_transferred == 0:
            return None
        return self.still_correct / self.n_transferred

    def to_json(self) -> dict:
        return {
            "n_transferred": self.n_transferred,
            "still_correct": self.still_correct,
            "attacked_accuracy": self.attacked_accuracy,
            "per_sample": self.per_sample,
        }


def config_echo(cfg: AttackConfig) -> dict:
    echo = asdict(cfg)
    echo["ranking_mode"] = cfg.ranking_mode.value
    echo["sim_gate"] = cfg.sim_gate.value
    return echo


def record_for(
    sample: TextSample, outcome: AttackOutcome, cfg: AttackConfig, label_map: LabelMap
) -> SampleRecord:
    n_words = len(outcome.adversarial.words)
    if outcome.status == AttackStatus.SKIPPED or n_words == 0:
        perturb = 0.0
    else:
        perturb = 100.0 * len(outcome.perturbed_indices) / n_words

    threshold = cfg.resolved_sim_threshold(sample.is_pair)
    gated = outcome.status == AttackStatus.SUCCESS
    if gated and cfg.sim_gate != SimGate.OFF and outcome.similarity is not None:
        gated = outcome.similarity >= threshold

    rendered = sample.render(outcome.adversarial.words)
    if sample.is_pair:
        premise, hypothesis = rendered
        adversarial = TextSample(
            id=f"{sample.id}-adv",
            label=sample.label,
            premise=premise,
            hypothesis=hypothesis,
            attack_side=sample.attack_side,
        )
    else:
        adversarial = TextSample(id=f"{sample.id}-adv", label=sample.label, text=rendered)

    return SampleRecord(
        id=sample.id,
        status=outcome.status.value,
        gated=gated,
        gold=outcome.gold,
        gold_label=label_map.name(outcome.gold),
        original_argmax=outcome.original_argmax,
        final_argmax=outcome.final_argmax,
        original=sample.to_json(),
        adversarial=adversarial.to_json(),
        perturbed_indices=outcome.perturbed_indices,
        replacements=tuple(
            {"index": r.index, "old": r.old, "new": r.new} for r in outcome.replacements
        ),
        perturb_percent=perturb,
        similarity=outcome.similarity,
        target_queries=outcome.target_queries,
        mlm_queries=outcome.mlm_queries,
        candidates_tried=outcome.candidates_tried,
        budget_exhausted=outcome.budget_exhausted,
        descent=outcome.descent,
    )


def _mean(values: list[float]) -> float | None:
    if not values:
        return None
    return sum(values) / len(values)


def subsample(corpus: Sequence[TextSample], max_samples: int, seed: int) -> list[TextSample]:
    """Seeded fixed-size subset, kept in corpus order."""
    if len(corpus) <= max_samples:
        return list(corpus)
    rng = random.Random(seed)
    keep = sorted(rng.sample(range(len(corpus)), max_samples))
    return [corpus[i] for i in keep]


def evaluate(
    corpus: Sequence[TextSample],
    cfg: AttackConfig,
    gateway: ModelGateway,
    *,
    workers: int = 1,
    max_samples: int | None = None,
) -> EvaluationResult:
    """Attack every sample and fold the outcomes into one report.

    Samples run independently (thread-parallel when ``workers`` > 1); the
    fold is ordered by sample id, so worker count never changes the report.
    """
    started = time.perf_counter()
    samples = list(corpus)
    if max_samples is not None:
        samples = subsample(samples, max_samples, cfg.seed)

    def run_one(sample: TextSample):
        outcome = attack(sample, cfg, gateway.session())
        return sample, outcome

    if workers <= 1:
        pairs = [run_one(s) for s in samples]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(run_one, samples))

    records = []
    timings: dict[str, float] = {}
    for sample, outcome in pairs:
        records.append(record_for(sample, outcome, cfg, gateway.label_map))
        timings[sample.id] = outcome.elapsed
    records.sort(key=lambda r: r.id)

    skipped = [r for r in records if r.status == AttackStatus.SKIPPED.value]
    attempted = [r for r in records if r.status != AttackStatus.SKIPPED.value]
    raw = [r for r in records if r.status == AttackStatus.SUCCESS.value]
    gated = [r for r in records if r.gated]

    report = EvaluationReport(
        n_samples=len(records),
        skipped_count=len(skipped),
        originally_correct=len(attempted),
        raw_success_count=len(raw),
        gated_success_count=len(gated),
        avg_perturb_pct=_mean([r.perturb_percent for r in gated]),
        avg_similarity=_mean([r.similarity for r in gated if r.similarity is not None]),
        avg_target_queries=_mean([float(r.target_queries) for r in attempted]),
        avg_mlm_queries=_mean([float(r.mlm_queries) for r in attempted]),
        avg_runtime_s=_mean([timings[r.id] for r in records]),
        config_echo=config_echo(cfg),
    )
    return EvaluationResult(
        report=report,
        records=tuple(records),
        timings=timings,
        label_map=gateway.label_map,
        wall_time_s=time.perf_counter() - started,
    )


# Default variant grids; `values` overrides them per call.
DEFAULT_K_SWEEP = (0, 1, 6, 12, 24, 48)
DEFAULT_PROB_THRESHOLDS = (None, math.log(0.005), math.log(0.02), math.log(0.05))


def ablate(
    corpus: Sequence[TextSample],
    base_cfg: AttackConfig,
    dimension: AblationDimension,
    gateway: ModelGateway,
    *,
    values: Sequence | None = None,
    workers: int = 1,
    max_samples: int | None = None,
) -> dict[str, EvaluationResult]:
    """One evaluation per variant along a single config dimension.

    Every variant shares the corpus, the subsample selection and the
    per-sample seeds, so differences are attributable to the dimension.
    """
    if dimension == AblationDimension.K_SWEEP:
        grid = values if values is not None else DEFAULT_K_SWEEP
        variants = [(f"k={v}", replace(base_cfg, k=int(v))) for v in grid]
    elif dimension == AblationDimension.RANKING_MODES:
        grid = values if values is not None else tuple(RankingMode)
        variants = [
            (mode.value, replace(base_cfg, ranking_mode=RankingMode(mode)))
            for mode in grid
        ]
    elif dimension == AblationDimension.SUBWORD_TOGGLE:
        grid = values if values is not None else (True, False)
        variants = [
            ("subword=" + ("on" if v else "off"), replace(base_cfg, use_subword_attack=bool(v)))
            for v in grid
        ]
    elif dimension == AblationDimension.PROB_THRESHOLD:
        grid = values if values is not None else DEFAULT_PROB_THRESHOLDS
        variants = [
            (
                "threshold=none" if v is None else f"threshold={float(v):.6g}",
                replace(base_cfg, prob_threshold=None if v is None else float(v)),
            )
            for v in grid
        ]
    else:
        raise ValueError(f"unknown ablation dimension: {dimension!r}")

    return {
        label: evaluate(corpus, cfg, gateway, workers=workers, max_samples=max_samples)
        for label, cfg in variants
    }


def read_records(path: str | Path) -> list[SampleRecord]:
    """Load the per-sample records a previous run wrote as JSONL."""
    return [SampleRecord.from_json(record) for record in read_jsonl(path)]


def transfer_evaluate(
    records: Sequence[SampleRecord] | EvaluationResult,
    gateway: ModelGateway,
    source_label_map: LabelMap | None = None,
) -> TransferReport:
    """Re-classify one run's gated adversarial samples under another target.

    Attacked accuracy here is the share still classified correctly; higher
    means the samples transfer less.
    """
    if isinstance(records, EvaluationResult):
        source_label_map = records.label_map
        records = records.records
    target_map = gateway.label_map
    if source_label_map is not None and source_label_map.name_to_id != target_map.name_to_id:
        raise LabelMapMismatch(
            f"source labels {source_label_map.name_to_id} != target labels {target_map.name_to_id}"
        )

    per_sample: dict[str, bool] = {}
    still_correct = 0
    for record in records:
        if not record.gated:
            continue
        sample = record.adversarial_sample()
        try:
            gold = target_map.resolve(record.gold_label)
        except KeyError as exc:
            raise LabelMapMismatch(str(exc)) from exc
        if sample.is_pair:
            payload: str | tuple[str, str] = (sample.premise, sample.hypothesis)
        else:
            payload = sample.text
        logits = gateway.raw_classify(payload)
        correct = logits.argmax() == gold
        per_sample[sample.id] = correct
        still_correct += int(correct)
    return TransferReport(
        n_transferred=len(per_sample),
        still_correct=still_correct,
        per_sample=per_sample,
    )


def export_adversarial_training_set(
    train_corpus: Sequence[TextSample],
    cfg: AttackConfig,
    gateway: ModelGateway,
    path: str | Path,
    *,
    workers: int = 1,
    max_samples: int | None = None,
) -> EvaluationResult:
    """Write the corpus with each gated adversarial sample interleaved after
    its original, same schema and gold labels; returns the underlying run."""
    result = evaluate(
        train_corpus, cfg, gateway, workers=workers, max_samples=max_samples
    )
    by_id = {r.id: r for r in result.records}

    def lines() -> Iterable[dict]:
        for sample in train_corpus:
            record = by_id.get(sample.id)
            if record is None:
                continue  # dropped by subsampling
            yield sample.to_json()
            if record.gated:
                yield record.adversarial

    write_jsonl(lines(), path)
    return result
