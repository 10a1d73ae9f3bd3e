"""Exception types raised across the engine."""


class TweetcheckError(Exception):
    """Base class for all engine errors."""


class DatasetError(TweetcheckError):
    """Dataset file is malformed, inconsistent, or fails validation."""


class SchemaVersionError(DatasetError):
    """Dataset file declares a schema version other than the expected one."""


class SplitError(TweetcheckError):
    """A train/test split cannot be produced (e.g. a stratum is too small)."""


class FeatureError(TweetcheckError):
    """Feature extraction or assembly failed."""


class MissingFamilyError(FeatureError):
    """A requested feature family has no values available."""

    def __init__(self, family: str, message: str | None = None):
        self.family = family
        super().__init__(message or f"family unavailable: {family}")


class EmptyTextError(TweetcheckError):
    """Input text is empty after preprocessing."""


class EmbeddingError(TweetcheckError):
    """Embedding store or vector validation failed."""


class ProviderError(EmbeddingError):
    """The embedding provider endpoint failed or returned bad data."""


class ModelError(TweetcheckError):
    """Model training, serialization, or prediction contract violation."""


class ConfigError(TweetcheckError):
    """Invalid experiment or service configuration."""
