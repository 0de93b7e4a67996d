"""Exception types shared across the package."""


class CohortShiftError(Exception):
    """Base class for all library errors."""


class SchemaError(CohortShiftError):
    """Schema definition is inconsistent, or data does not match the schema layout."""


class CsvParseError(CohortShiftError):
    """A CSV cell or row could not be parsed; message carries row/column context."""


class DomainValidationError(CohortShiftError):
    """A parsed value violates its feature's range or level set."""


class PredictorError(CohortShiftError):
    """A predictor broke its contract (non-finite output, wrong length, dead process)."""


class ConfigError(CohortShiftError):
    """A run configuration is structurally invalid."""
