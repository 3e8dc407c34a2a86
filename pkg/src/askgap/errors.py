"""Exception types shared across the package."""


class AskgapError(Exception):
    """Base class for all package errors."""


class EmptyDocument(AskgapError):
    """Raised when a text is empty or whitespace-only."""


class UnsupportedDialogue(AskgapError):
    """Raised when a dialogue does not have exactly two distinct speakers."""


class MissingReference(AskgapError):
    """Raised when a multi-reference metric receives zero references."""


class BackendUnavailable(AskgapError):
    """Raised when a remote question backend cannot be reached or answers
    with an error status (after retries for 5xx, immediately for 4xx)."""


class FixtureMiss(AskgapError):
    """Raised when a recorded backend has no entry for a request."""


class QuestionCountMismatch(AskgapError):
    """Raised when the number of questions does not match the number of
    pseudo-summary sentences for a question-bearing mode."""


class IndexOutOfRange(AskgapError):
    """Raised when a selection refers to a sentence index outside a document."""


class EmptyPlan(AskgapError):
    """Raised when every candidate unit of a control plan was filtered out."""


class ConfigError(AskgapError):
    """Raised when a build configuration fails validation."""


class SkipRateExceeded(AskgapError):
    """Raised when a build sees more skipped documents than the configured
    abort threshold allows."""
