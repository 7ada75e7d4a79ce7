"""HTTP transports. Clients never touch the network except through one of these,
so tests can count or forbid network activity by injection."""
from __future__ import annotations

import threading
from typing import Any, Callable, Protocol

import requests

from .errors import BackendUnavailable, TransportError


class Transport(Protocol):
    def request(self, method: str, url: str, *,
                params: dict[str, Any] | None = None,
                json_body: Any = None,
                headers: dict[str, str] | None = None) -> Any:
        """Perform one HTTP request and return the parsed JSON payload."""


class HttpTransport:
    """Real network transport backed by requests."""

    def __init__(self, timeout: float = 20.0):
        self.timeout = timeout

    def request(self, method: str, url: str, *, params=None, json_body=None, headers=None):
        try:
            resp = requests.request(method, url, params=params, json=json_body,
                                    headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendUnavailable(f"network failure calling {url}: {exc}") from exc
        if resp.status_code >= 400:
            raise TransportError(f"{url} returned {resp.status_code}", status=resp.status_code)
        try:
            return resp.json()
        except ValueError as exc:
            raise TransportError(f"{url} returned non-JSON payload") from exc


class CountingTransport:
    """Wraps a transport and counts calls; replay-mode tests assert the count is 0."""

    def __init__(self, inner: Transport | None = None):
        self.inner = inner
        self.calls = 0
        self._lock = threading.Lock()

    def request(self, method: str, url: str, *, params=None, json_body=None, headers=None):
        with self._lock:
            self.calls += 1
        if self.inner is None:
            raise BackendUnavailable(f"no live transport configured (call to {url})")
        return self.inner.request(method, url, params=params, json_body=json_body,
                                  headers=headers)


class ScriptedTransport:
    """Serves canned payloads from a handler; used to record fixtures offline."""

    def __init__(self, handler: Callable[[str, str, dict[str, Any] | None, Any], Any]):
        self.handler = handler
        self.calls = 0

    def request(self, method: str, url: str, *, params=None, json_body=None, headers=None):
        self.calls += 1
        return self.handler(method, url, params, json_body)
