from enum import Enum
from typing import Optional


class SlrScreenError(Exception):
    """Base class for every error raised by the screening pipeline."""


class ConfigError(SlrScreenError):
    pass


class MissingCredentialError(SlrScreenError):
    pass


class IngestError(SlrScreenError):
    pass


class FileUnreadableError(IngestError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"Cannot read {path}: {reason}")
        self.path = path
        self.reason = reason


class MissingColumnError(IngestError):
    def __init__(self, name: str, path: Optional[str] = None):
        where = f" in {path}" if path else ""
        super().__init__(f"Missing required column '{name}'{where}")
        self.name = name
        self.path = path


class MalformedCsvError(IngestError):
    """
    `row` is the 1-based file line the CSV parser stopped at, the header being line 1
    (0 when the parser reports none). It runs ahead of the data-row index once a quoted
    field has spanned several lines.
    """

    def __init__(self, row: int, detail: str = ""):
        super().__init__(f"Malformed CSV at row {row}" + (f": {detail}" if detail else ""))
        self.row = row
        self.detail = detail


class IncompleteRecordError(SlrScreenError):
    pass


class ParseErrorKind(str, Enum):
    EMPTY_REPLY = "EmptyReply"
    MISSING_ACCEPTANCE = "MissingAcceptance"
    UNRECOGNIZED_ACCEPTANCE_VALUE = "UnrecognizedAcceptanceValue"


class DecisionParseError(SlrScreenError):
    def __init__(self, kind: ParseErrorKind, offending_text: str):
        super().__init__(f"{kind.value}: {offending_text[:80]!r}")
        self.kind = kind
        self.offending_text = offending_text


class TransportError(SlrScreenError):
    """
    A failed exchange with the model endpoint.

    `retryable` is True for rate limiting, 5xx responses, timeouts and connection errors.
    Any other failure is terminal for the record.
    """

    def __init__(
        self,
        message: str,
        status_code: Optional[int] = None,
        retryable: bool = False,
        retry_after: Optional[float] = None,
    ):
        super().__init__(message)
        self.status_code = status_code
        self.retryable = retryable
        self.retry_after = retry_after


class JournalError(SlrScreenError):
    pass


class JournalWriteError(JournalError):
    pass


class JournalCorruptError(JournalError):
    def __init__(self, path: str, line: int, detail: str):
        super().__init__(f"Journal {path} is corrupt at line {line}: {detail}")
        self.path = path
        self.line = line


class FileUnwritableError(SlrScreenError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"Cannot write {path}: {reason}")
        self.path = path
