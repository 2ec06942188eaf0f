"""Exception types raised across the package.

Everything user-triggerable inherits from MarketLabError so the service layer
can map the whole family onto HTTP 400 responses.
"""


class MarketLabError(Exception):
    """Base class for every domain error this package raises."""


class CsvFormatError(MarketLabError):
    """A CSV document violates the expected header/row format."""


class InvalidBarError(MarketLabError):
    """A price bar violates its invariants (ordering of OHLC, positivity)."""


class AlignmentError(MarketLabError):
    """Series could not be joined on a common, non-empty date set."""


class SplitError(MarketLabError):
    """A date split produced an empty or overlapping partition."""


class DegenerateColumnError(MarketLabError):
    """A column is constant where a non-degenerate one is required."""


class MissingColumnError(MarketLabError):
    """A referenced column does not exist in the frame."""


class WindowError(MarketLabError):
    """Window length is incompatible with the series it is applied to."""


class DegenerateSeriesError(MarketLabError):
    """A vector is constant, so its correlation is undefined."""


class CorrelationRangeError(MarketLabError):
    """A correlation value lies outside [-1, 1]."""


class ShapeMismatchError(MarketLabError):
    """Array dimensions do not agree with the model configuration."""


class ConfigError(MarketLabError):
    """A configuration value violates its documented range."""


class NonFiniteError(MarketLabError):
    """A gradient or loss value is NaN or infinite."""


class TrainingDivergedError(MarketLabError):
    """Training hit a non-finite loss; message carries epoch/batch coordinates."""


class MetricsError(MarketLabError):
    """Evaluation inputs make a metric undefined (e.g. zero true value for MAPE)."""


class CheckpointError(MarketLabError):
    """A model checkpoint could not be parsed or fails its self-description."""


class PipelineError(MarketLabError):
    """An experiment stage failed; carries the stage name and the root cause."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}': {cause}")


class ProviderError(MarketLabError):
    """The market-data provider returned an error or malformed payload."""


class RateLimitError(ProviderError):
    """The provider rejected the call with a rate-limit note."""

    def __init__(self, message: str, retry_after_s: float = 60.0):
        self.retry_after_s = retry_after_s
        super().__init__(message)
