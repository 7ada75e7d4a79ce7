"""Errors raised by backend clients."""
from __future__ import annotations


class BackendError(Exception):
    """Base class for backend failures."""


class BackendUnavailable(BackendError):
    """Live network call failed or no backend is configured."""


class CacheMiss(BackendError):
    """Replay mode and no recording exists for this request."""


class QuotaExceeded(BackendError):
    """The live engine rejected the call for quota reasons."""


class ContextTooLong(BackendError):
    """The assembled prompt exceeds the model's context limit."""


class UnreadableImage(BackendError):
    """Image bytes are required but not retrievable."""


class TransportError(BackendError):
    """HTTP-level failure, carrying the status code when known."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status
