"""Exception hierarchy shared across the engine."""


class ProgevoError(Exception):
    """Base class for all engine errors."""


class ConfigError(ProgevoError):
    """Invalid configuration. ``field`` names the offending dotted path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class EvaluationInvalid(ProgevoError):
    """A score could not be accepted (e.g. NaN or inf)."""


class IntegrityError(ProgevoError):
    """Internal bookkeeping violated; indicates an orchestrator bug."""


class NoSnapshotError(ProgevoError):
    """Backtracking requested but no eligible snapshot exists."""


class ParseError(ProgevoError):
    """An LLM response did not follow the expected grammar."""

    def __init__(self, message: str, text: str):
        self.text = text
        super().__init__(message)


class RenderError(ProgevoError):
    """A prompt template placeholder was left unbound."""

    def __init__(self, placeholder: str):
        self.placeholder = placeholder
        super().__init__(placeholder)


class ProviderError(ProgevoError):
    """Base for completion-backend failures."""


class RetriableProviderError(ProviderError):
    """Timeout, transport failure, or 5xx/429; safe to retry."""


class FatalProviderError(ProviderError):
    """Authentication or request errors; retrying will not help."""


class ProviderUnavailable(ProviderError):
    """Retries exhausted."""


class ScriptExhausted(ProviderError):
    """Mock provider has no entry matching the call."""


class CheckpointMismatch(ProgevoError):
    """Checkpoint was written under a different run configuration."""


def is_fatal(exc: BaseException) -> bool:
    """Errors that must abort the run instead of skipping an iteration."""
    return isinstance(exc, (FatalProviderError, ScriptExhausted, IntegrityError)) or not isinstance(exc, ProgevoError)
