"""Exception types shared across the toolkit."""

from __future__ import annotations


class DataValidationError(ValueError):
    """Input data violates the documented schema or an invariant."""


class TransportError(RuntimeError):
    """A remote endpoint was unreachable or returned a non-conforming response."""

    def __init__(self, message: str, chunk_index: int | None = None,
                 document_id: str | None = None):
        super().__init__(message)
        self.chunk_index = chunk_index
        self.document_id = document_id


class CollinearityError(DataValidationError):
    """The regression design matrix is rank deficient."""

    def __init__(self, message: str, columns: list[str]):
        super().__init__(message)
        self.columns = columns


class AnswerNotInContextWarning(UserWarning):
    """A gold answer is not a substring of its document context."""
