"""Typed errors raised across the compression pipeline."""

from __future__ import annotations


class XfamError(Exception):
    """Base class for all library errors."""


class InvalidInputError(XfamError):
    """Caller-supplied data violates a documented precondition."""


class InvalidConfigError(XfamError):
    """A configuration value is out of its legal range."""


class EmptySelectionError(XfamError):
    """The budget admits no chunk at all."""


class CapabilityError(XfamError):
    """A tokenizer or model lacks a required feature (e.g. offsets)."""


class DumpFormatError(XfamError):
    """An attention dump has a bad magic, version, dtype, or header."""


class DumpCorruptionError(XfamError):
    """An attention dump header parses but the payload is inconsistent."""


class ProtocolError(XfamError):
    """A provider returned a tensor inconsistent with the request."""


class TransportError(XfamError):
    """A remote provider could not be reached.

    ``attempts`` records how many tries the retry policy made before
    giving up.
    """

    def __init__(self, message: str, attempts: int = 1):
        super().__init__(message)
        self.attempts = attempts


class ContextOverflowError(XfamError):
    """The draft sequence exceeds the provider's native context length."""


class BudgetClampWarning(UserWarning):
    """A token budget exceeded the sequence length and was clamped."""
