"""Error taxonomy for the export pipeline."""


class ExportError(Exception):
    """Base class for everything this package raises on purpose."""


class CheckpointError(ExportError):
    """A checkpoint file is missing, unreadable, or structurally wrong."""


class VocabMismatch(ExportError):
    """Classifier and MLM checkpoints disagree on the shared vocabulary."""


class ParityError(ExportError):
    """Exported graph logits drifted beyond the allowed budget."""


class SchemaError(ExportError):
    """A training-data file does not follow the corpus JSONL schema."""


class TrainingDiverged(ExportError):
    """A training loop produced non-finite loss."""
