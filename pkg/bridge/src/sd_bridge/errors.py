class BridgeError(Exception):
    """Base class for bridge failures."""


class JobError(BridgeError):
    """Malformed or incomplete job description."""


class CorpusError(BridgeError):
    """Problem with a prompt corpus (empty, overflowing prompts, ...)."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class MissingDependencyError(BridgeError):
    """An optional model stack (torch/transformers/diffusers) is not installed."""
