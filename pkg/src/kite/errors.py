"""Exception hierarchy shared across the engine.

Every error carries a short machine-readable ``code`` that the HTTP layer
and CLI surface verbatim.
"""

from __future__ import annotations


class KiteError(Exception):
    """Base class for all engine errors."""

    default_code = "error"

    def __init__(self, message: str, *, code: str | None = None):
        super().__init__(message)
        self.code = code or self.default_code


class IngestError(KiteError):
    default_code = "ingest"


class IndexingError(KiteError):
    default_code = "index"


class LexicalError(KiteError):
    default_code = "lexical"


class ProviderError(KiteError):
    """A model-backend client failed or violated its contract."""

    default_code = "provider"

    def __init__(self, message: str, *, code: str | None = None, chunk_id: str | None = None):
        super().__init__(message, code=code)
        self.chunk_id = chunk_id


class TutorError(KiteError):
    default_code = "tutor"


class EvalError(KiteError):
    default_code = "eval"


class ConfigError(KiteError):
    default_code = "config"
