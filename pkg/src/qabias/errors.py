"""Exception hierarchy shared across the toolkit."""


class QABiasError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(QABiasError):
    """An item, config, or request violates an invariant."""


class DatasetFormatError(QABiasError):
    """A dataset file could not be parsed in the declared format."""


class SplitError(QABiasError):
    """A split rule is invalid or cannot be applied to the dataset."""


class EncodingError(QABiasError):
    """A question/answer pair cannot be encoded under the scorer config."""


class TrainingError(QABiasError):
    """Scorer training could not run or complete."""


class CheckpointError(QABiasError):
    """A scorer checkpoint is missing, corrupt, or version-incompatible."""
