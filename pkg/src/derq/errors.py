"""Exception types shared across the package."""


class DerqError(Exception):
    """Base class for all errors raised by derq."""


class InputError(DerqError):
    """Malformed input: bad generator index, rank mismatch, invalid word, ..."""


class PresentationParseError(InputError):
    """Presentation text that does not parse; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InconsistentPresentationError(DerqError):
    """A presentation that fails (or is presumed to fail) the consistency check."""


class CollectionLimitError(InconsistentPresentationError):
    """Collection exceeded the elementary-step cap.

    For weight-compatible consistent presentations collection terminates, so
    hitting the cap signals an inconsistent (or non-weighted pathological)
    input presentation.
    """


class PreconditionError(DerqError):
    """A documented operation precondition does not hold; .kind says which."""

    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


class BudgetExceededError(DerqError):
    """A resource budget was breached; .progress carries the partial state."""

    def __init__(self, message, progress=None):
        super().__init__(message)
        self.progress = progress or {}
