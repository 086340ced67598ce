"""Uniform access to the three black-box model roles.

The engine talks to a target classifier, a masked-LM candidate generator and
an optional sentence-similarity scorer only through :class:`GatewaySession`,
which keeps an exact ledger of queries.  Backends are duck-typed: anything
with the right methods works, whether in-process TorchScript graphs, a
remote HTTP service, or a test stub.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .errors import BackendUnavailable, SequenceTooLong, ShapeMismatch
from .tokenization import SubwordAlignment, Vocabulary

SampleText = str | tuple[str, str]


@dataclass(frozen=True)
class LabelMap:
    """Bidirectional label name <-> id mapping."""

    name_to_id: dict[str, int]

    def __post_init__(self):
        ids = sorted(self.name_to_id.values())
        if ids != list(range(len(ids))):
            raise ShapeMismatch(f"label ids must be 0..n-1, got {ids}")

    def __len__(self) -> int:
        return len(self.name_to_id)

    @property
    def id_to_name(self) -> dict[int, str]:
        return {v: k for k, v in self.name_to_id.items()}

    def name(self, label_id: int) -> str:
        return self.id_to_name[label_id]

    def resolve(self, label: int | str) -> int:
        """Accept either a label id or a label name."""
        if isinstance(label, bool):
            raise KeyError(label)
        if isinstance(label, int):
            if label not in self.id_to_name:
                raise KeyError(f"label id {label} not in map")
            return label
        if label in self.name_to_id:
            return self.name_to_id[label]
        raise KeyError(f"unknown label {label!r}")

    @classmethod
    def load(cls, path) -> "LabelMap":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.name_to_id, indent=2), encoding="utf-8")


@dataclass(frozen=True)
class Logits:
    """Per-label scores from the target model, raw or softmaxed."""

    values: tuple[float, ...]
    label_map: LabelMap

    def __post_init__(self):
        if len(self.values) != len(self.label_map):
            raise ShapeMismatch(
                f"{len(self.values)} scores for {len(self.label_map)} labels"
            )
        if not all(math.isfinite(v) for v in self.values):
            raise ShapeMismatch(f"non-finite logits {self.values}")

    def argmax(self) -> int:
        # ties resolve to the lowest label id
        return max(range(len(self.values)), key=lambda i: (self.values[i], -i))

    def score(self, label_id: int) -> float:
        return self.values[label_id]


@dataclass(frozen=True)
class MlmTopK:
    """Per-position top-k (token id, log-probability) rows.

    Rows are sorted by descending log-prob, ties broken by ascending token
    id, so candidate order is reproducible across backends.
    """

    token_ids: tuple[tuple[int, ...], ...]
    logprobs: tuple[tuple[float, ...], ...]
    k: int

    def __len__(self) -> int:
        return len(self.token_ids)

    def row(self, position: int) -> list[tuple[int, float]]:
        return list(zip(self.token_ids[position], self.logprobs[position]))


@dataclass
class QueryLedger:
    """Exact accounting of model accesses for one attacked sample."""

    target_queries: int = 0
    mlm_queries: int = 0
    wall_time: float = 0.0

    def snapshot(self) -> "QueryLedger":
        return replace(self)


class ClassifierBackend(Protocol):
    n_labels: int

    def logits(self, text: str, pair: str | None = None) -> Sequence[float]: ...


class MlmBackend(Protocol):
    max_positions: int | None

    def topk(
        self, token_ids: Sequence[int], k: int
    ) -> tuple[list[list[int]], list[list[float]]]: ...


class EmbeddingBackend(Protocol):
    def embed(self, text: str) -> Sequence[float]: ...


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    va, vb = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0.0 and nb == 0.0:
        return 1.0
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(va, vb) / (na * nb), -1.0, 1.0))


class ModelGateway:
    """Holds the configured backends; hand out per-sample sessions.

    Counters live on sessions, not here, so parallel corpus evaluation never
    contends on a shared ledger.
    """

    def __init__(
        self,
        classifier: ClassifierBackend,
        mlm: MlmBackend | None,
        label_map: LabelMap,
        vocab: Vocabulary,
        similarity: EmbeddingBackend | None = None,
        logit_kind: str = "raw",
    ):
        self.classifier = classifier
        self.mlm = mlm
        self.label_map = label_map
        self.vocab = vocab
        self.similarity = similarity
        self.logit_kind = logit_kind

    @property
    def max_positions(self) -> int | None:
        return getattr(self.mlm, "max_positions", None) if self.mlm else None

    def session(self) -> "GatewaySession":
        return GatewaySession(self)

    # Raw calls shared by sessions and the HTTP service; no query accounting.

    def raw_classify(self, sample: SampleText) -> Logits:
        if isinstance(sample, str):
            values = self.classifier.logits(sample)
        else:
            premise, hypothesis = sample
            values = self.classifier.logits(premise, hypothesis)
        return Logits(tuple(float(v) for v in values), self.label_map)

    def raw_topk(
        self, token_ids: Sequence[int], k: int
    ) -> tuple[list[list[int]], list[list[float]]]:
        if self.mlm is None:
            raise BackendUnavailable("no masked-LM backend configured")
        k = min(k, len(self.vocab))
        limit = self.max_positions
        if limit is not None and len(token_ids) > limit - 2:
            raise SequenceTooLong(
                f"{len(token_ids)} tokens exceed the model limit of {limit - 2}"
            )
        ids, logprobs = self.mlm.topk(token_ids, k)
        # normalize row order: descending log-prob, ascending token id
        out_ids, out_lps = [], []
        for row_ids, row_lps in zip(ids, logprobs):
            order = sorted(range(len(row_ids)), key=lambda j: (-row_lps[j], row_ids[j]))
            out_ids.append([int(row_ids[j]) for j in order])
            out_lps.append([float(row_lps[j]) for j in order])
        return out_ids, out_lps

    def raw_embed(self, text: str) -> list[float]:
        if self.similarity is None:
            raise BackendUnavailable("no similarity backend configured")
        return [float(v) for v in self.similarity.embed(text)]


class GatewaySession:
    """One attack's view of the gateway, with its own query ledger."""

    def __init__(self, gateway: ModelGateway):
        self.gateway = gateway
        self.ledger = QueryLedger()

    @property
    def label_map(self) -> LabelMap:
        return self.gateway.label_map

    @property
    def vocab(self) -> Vocabulary:
        return self.gateway.vocab

    @property
    def has_similarity(self) -> bool:
        return self.gateway.similarity is not None

    def classify(self, sample: SampleText) -> Logits:
        result = self.gateway.raw_classify(sample)
        self.ledger.target_queries += 1
        return result

    def mlm_topk(self, alignment: SubwordAlignment, k: int) -> MlmTopK:
        ids, logprobs = self.gateway.raw_topk(alignment.tokens, k)
        self.ledger.mlm_queries += 1
        return MlmTopK(
            token_ids=tuple(tuple(r) for r in ids),
            logprobs=tuple(tuple(r) for r in logprobs),
            k=min(k, len(self.gateway.vocab)),
        )

    def mlm_span_logprobs(
        self, token_ids: Sequence[int], start: int, span_ids: Sequence[int]
    ) -> list[float]:
        """Log-probs of ``span_ids`` substituted at ``start``, one extra MLM pass.

        Only used by the optional in-context rescore mode; backends without
        ``span_logprobs`` reject it.
        """
        mlm = self.gateway.mlm
        if mlm is None or not hasattr(mlm, "span_logprobs"):
            raise BackendUnavailable("backend does not support rescoring")
        values = mlm.span_logprobs(token_ids, start, span_ids)
        self.ledger.mlm_queries += 1
        return [float(v) for v in values]

    def similarity(self, a: str, b: str) -> float:
        return cosine(self.gateway.raw_embed(a), self.gateway.raw_embed(b))

    def ledger_snapshot(self) -> QueryLedger:
        return self.ledger.snapshot()
