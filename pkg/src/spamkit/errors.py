"""Exception hierarchy shared by all spamkit modules.

Two branches matter for the CLI exit codes: ``DataError`` (bad input data,
exit 2) and ``ModelError`` (bad or incompatible model artifacts, exit 3).
"""


class SpamkitError(Exception):
    """Base class for all spamkit errors."""


class DataError(SpamkitError):
    """Input data is missing, malformed, or inconsistent."""


class ModelError(SpamkitError):
    """A model artifact is unusable: wrong schema, version, or corrupt."""


# -- corpus ---------------------------------------------------------------

class MalformedRecord(DataError):
    """A data row is missing a field or carries an unknown label."""


class EmptyCorpus(DataError):
    """An operation produced or received a corpus with zero messages."""


class IoFailure(DataError):
    """The underlying file could not be read or written."""


class DegenerateClass(DataError):
    """An operation requires both classes but one has zero members."""


class CountMismatch(DataError):
    """Requested split sizes do not sum to the corpus size."""


# -- preprocess -----------------------------------------------------------

class InvalidLength(DataError):
    """Sequence encoding was asked for a max_len shorter than [CLS]+[SEP]+pad."""


# -- rules ----------------------------------------------------------------

class SchemaError(DataError):
    """A structured input file violates its documented schema."""


# -- vectorize ------------------------------------------------------------

class EmptyVocabulary(DataError):
    """No term survived the document-frequency threshold."""


# -- embed ----------------------------------------------------------------

class DimensionMismatch(DataError):
    """An embeddings file mixes vectors of different lengths."""


class MissingEmbedding(DataError):
    """A text was queried that the embeddings file does not contain."""

    def __init__(self, message, ids=None):
        super().__init__(message)
        self.ids = list(ids) if ids is not None else []


class InvalidDimension(DataError):
    """Requested embedding dimension is below the supported minimum."""


# -- classify -------------------------------------------------------------

class NegativeFeature(DataError):
    """Multinomial models require non-negative feature values."""


class NonFiniteLoss(ModelError):
    """Training diverged; typically the learning rate is too large."""


class SchemaMismatch(ModelError):
    """Matrix shape or feature kind differs from what the model was fit on."""


class LengthMismatch(DataError):
    """Prediction and truth vectors have different lengths."""


# -- persistence ----------------------------------------------------------

class UnsupportedVersion(ModelError):
    """The artifact was written by a newer format version."""


class CorruptModel(ModelError):
    """The artifact is truncated or fails its checksum."""


class ConfigError(SpamkitError):
    """Pipeline configuration is internally inconsistent."""
