"""Exception types shared across the package."""


class MlmAttackError(Exception):
    """Base class for all errors raised by this package."""


class VocabMissingSpecialToken(MlmAttackError):
    """The vocabulary lacks a required special token ([MASK] or [UNK])."""


class BackendUnavailable(MlmAttackError):
    """A model backend could not be reached or loaded."""


class ShapeMismatch(MlmAttackError):
    """Backend output disagrees with the declared label map."""


class SequenceTooLong(MlmAttackError):
    """Token sequence exceeds the backend's positional limit."""


class SpanTooLong(MlmAttackError):
    """A word's sub-word span exceeds the configured search cap."""


class LabelMapMismatch(MlmAttackError):
    """Two models disagree on the label set."""


class EmptyInput(MlmAttackError):
    """An operation received an empty word sequence."""


class ConfigError(MlmAttackError):
    """Invalid configuration value."""
