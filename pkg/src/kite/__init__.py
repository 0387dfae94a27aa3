"""KITE: a retrieval-grounded, intent-aware tutoring engine with an offline
evaluation harness. All model backends are pluggable clients with
deterministic mock implementations."""

__version__ = "0.1.0"

from kite.errors import (
    ConfigError,
    EvalError,
    IndexingError,
    IngestError,
    KiteError,
    LexicalError,
    ProviderError,
    TutorError,
)

__all__ = [
    "ConfigError",
    "EvalError",
    "IndexingError",
    "IngestError",
    "KiteError",
    "LexicalError",
    "ProviderError",
    "TutorError",
    "__version__",
]
