"""Companion toolkit that produces the model bundles the attack engine loads.

It trains small transformer checkpoints, exports them to the portable
bundle directory format, self-checks the export against the source
models, and fine-tunes classifiers on engine-exported adversarial
corpora.  It talks to the engine only through files: bundle directories
in, corpus JSONL out and back in.
"""

__version__ = "0.1.0"

from .errors import (
    CheckpointError,
    ExportError,
    ParityError,
    SchemaError,
    TrainingDiverged,
    VocabMismatch,
)
from .exporter import PARITY_BUDGET, export_bundle, file_sha256
from .finetune import finetune_on_adversarial, read_augmented
from .manifest import BundleManifest, ParityReport
from .training import train_tiny_world

__all__ = [
    "BundleManifest",
    "CheckpointError",
    "ExportError",
    "PARITY_BUDGET",
    "ParityError",
    "ParityReport",
    "SchemaError",
    "TrainingDiverged",
    "VocabMismatch",
    "export_bundle",
    "file_sha256",
    "finetune_on_adversarial",
    "read_augmented",
    "train_tiny_world",
]
