"""Exception hierarchy shared by all stages."""


class ProcTailError(Exception):
    """Base class for every error raised by proctail."""


class LogParseError(ProcTailError):
    """Raised when an event log file cannot be read.

    ``position`` holds ``(line, column)`` for XML syntax errors and
    ``row`` the 1-based data row for CSV errors, when known.
    """

    def __init__(self, message, *, position=None, row=None):
        super().__init__(message)
        self.position = position
        self.row = row


class EmptyLogError(ProcTailError, ValueError):
    """Raised when an operation needs at least one case."""


class AnalysisError(ProcTailError, ValueError):
    """Raised for invalid inputs to clustering, indicator or ranking steps."""
