"""Typed exporter errors."""


class ExportError(Exception):
    """Base class for exporter failures."""


class ModelError(ExportError):
    """Model assets missing or unusable."""


class VocabError(ExportError):
    """Token ids fall outside the model vocabulary."""


class ContextLengthError(ExportError):
    """Prompt plus lookahead exceeds the model context; never truncated."""


class AttentionUnavailableError(ExportError):
    """The loaded model does not expose attention weights."""
