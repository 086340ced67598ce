"""Black-box word-substitution attacks on text classifiers.

Vulnerable words are found by masking them one at a time and measuring the
drop in the gold-label score; replacements come from a masked language
model's per-position predictions over the original, unmasked sequence.
The package ships an evaluation harness, ablation runner, transferability
check, adversarial-training export, a CLI, and an HTTP service speaking a
small JSON model protocol.
"""

from .candidates import Candidate, FilterConfig, SubwordSearchConfig
from .engine import (
    AttackConfig,
    AttackOutcome,
    AttackStatus,
    Replacement,
    SimGate,
    attack,
    derive_seed,
)
from .errors import (
    BackendUnavailable,
    ConfigError,
    EmptyInput,
    LabelMapMismatch,
    MlmAttackError,
    SequenceTooLong,
    ShapeMismatch,
    SpanTooLong,
    VocabMissingSpecialToken,
)
from .evaluation import (
    AblationDimension,
    EvaluationReport,
    EvaluationResult,
    SampleRecord,
    TransferReport,
    ablate,
    evaluate,
    export_adversarial_training_set,
    transfer_evaluate,
)
from .gateway import LabelMap, Logits, MlmTopK, ModelGateway, QueryLedger
from .importance import ImportanceEntry, ImportanceList, RankingMode, importance_scores, select_words
from .samples import TextSample, load_corpus, save_corpus
from .tokenization import SubwordAlignment, Vocabulary, WordSequence, align_subwords, split_words

__version__ = "0.1.0"

__all__ = [
    "AblationDimension",
    "AttackConfig",
    "AttackOutcome",
    "AttackStatus",
    "BackendUnavailable",
    "Candidate",
    "ConfigError",
    "EmptyInput",
    "EvaluationReport",
    "EvaluationResult",
    "FilterConfig",
    "ImportanceEntry",
    "ImportanceList",
    "LabelMap",
    "LabelMapMismatch",
    "Logits",
    "MlmAttackError",
    "MlmTopK",
    "ModelGateway",
    "QueryLedger",
    "RankingMode",
    "Replacement",
    "SampleRecord",
    "SequenceTooLong",
    "ShapeMismatch",
    "SimGate",
    "SpanTooLong",
    "SubwordAlignment",
    "SubwordSearchConfig",
    "TextSample",
    "TransferReport",
    "Vocabulary",
    "VocabMissingSpecialToken",
    "WordSequence",
    "align_subwords",
    "attack",
    "derive_seed",
    "evaluate",
    "ablate",
    "export_adversarial_training_set",
    "importance_scores",
    "load_corpus",
    "save_corpus",
    "select_words",
    "split_words",
    "transfer_evaluate",
    "__version__",
]
