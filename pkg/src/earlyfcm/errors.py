"""Exception hierarchy shared by all earlyfcm modules."""


class EarlyFcmError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(EarlyFcmError):
    """Invalid configuration values (cluster counts, fuzzifier, flags...)."""


class InputError(EarlyFcmError):
    """Invalid runtime input (mismatched lengths, out-of-range arguments)."""


class NumericError(EarlyFcmError):
    """A computation produced a non-finite intermediate."""


class DegenerateClusterError(EarlyFcmError):
    """A cluster's total membership weight collapsed to (numerically) zero."""


class DegenerateFitError(EarlyFcmError):
    """A regression fit has no unique solution (e.g. all inputs identical)."""


class CalibrationError(EarlyFcmError):
    """The calibration pipeline cannot produce a usable model."""


class IngestionError(EarlyFcmError):
    """A corpus file could not be read or has an unsupported format."""


class ParseError(EarlyFcmError):
    """A CSV document is malformed; message carries the line number."""


class SchemaError(EarlyFcmError):
    """A JSON document is missing or mistypes a required field."""


class ModelVersionError(SchemaError):
    """A persisted model document has an incompatible version."""


class OutputError(EarlyFcmError):
    """An output artifact cannot be produced (e.g. label outside palette)."""
