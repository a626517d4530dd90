"""Exception types shared across the engine."""


class SedaError(Exception):
    """Base class for all engine errors."""


class UnparsableUrl(SedaError):
    """Input string is not an absolute URL."""


class Unidentifiable(SedaError):
    """Raw record carries neither a dataset name nor a URL."""


class MalformedDocument(SedaError):
    """Input contains no well-formed markup at all."""


class MalformedResponse(SedaError):
    """Language-model output could not be parsed into the expected shape.

    The raw response is attached so callers can log or surface it.
    """

    def __init__(self, message: str, raw_response: str = ""):
        super().__init__(message)
        self.raw_response = raw_response


class ContractViolation(SedaError):
    """A structured response violated a hard output contract."""


class AdapterFailure(SedaError):
    """Source adapter could not read its input at all."""


class StoreUnavailable(SedaError):
    """Operation attempted against a closed or missing store."""


class CorruptStore(SedaError):
    """Persisted store file failed to parse."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"{message} (line {line_number})")
        self.line_number = line_number


class EmbedderFailure(SedaError):
    """External embedding provider failed."""


class NoWeight(SedaError):
    """Budget allocation requested while every site weight is zero."""


class UnknownTag(SedaError):
    """Tag filter references a label absent from the vocabulary."""


class UnknownDataset(SedaError):
    """Dataset id not present in the store."""


class DegenerateQuery(SedaError):
    """Exploration gain requested for an empty initial result set."""


class BindFailure(SedaError):
    """HTTP service could not bind its port."""
