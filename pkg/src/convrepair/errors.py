"""Exception hierarchy shared across the package."""


class ConvRepairError(Exception):
    """Base class for all errors raised by this package."""


class ManifestError(ConvRepairError):
    """Corpus manifest failed to parse or violates the schema."""


class SpanError(ConvRepairError):
    """A bug or patch span does not fit the file it refers to."""


class WorkspaceError(ConvRepairError):
    """The validation workspace is missing or not usable."""


class CommandNotFoundError(ConvRepairError):
    """A build/test command could not be spawned at all."""


class NoFailureParsedError(ConvRepairError):
    """A failing test run produced output no parser understood."""


class UnparseableResponseError(ConvRepairError):
    """A model reply contained no extractable code."""


class ContractViolation(ConvRepairError):
    """An operation was called outside its precondition."""


class BackendError(ConvRepairError):
    """Base class for LLM backend failures."""


class TransportError(BackendError):
    """The backend could not be reached or kept failing."""


class RateLimitError(TransportError):
    """The backend signalled rate limiting."""


class ContextOverflowError(BackendError):
    """The conversation no longer fits the model context window."""


class ScriptError(ConvRepairError):
    """A scripted-backend rule file is malformed."""


class EngineError(ConvRepairError):
    """Repair infrastructure failed (not a patch verdict)."""
