"""LLM chat-completion clients: live HTTP, scripted stubs, and record/replay."""
from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Any, Sequence

from ..models import TokenUsage
from .cache import BackendMode, ResponseCache, cache_key
from .config import BackendConfig
from .errors import BackendUnavailable, CacheMiss, ContextTooLong, TransportError
from .transport import Transport


@dataclass(frozen=True)
class LlmMessage:
    role: str
    text: str
    image_hashes: tuple[str, ...] = ()


@dataclass(frozen=True)
class LlmRequest:
    model_id: str
    messages: tuple[LlmMessage, ...]
    temperature: float = 0.0
    seed: int | None = None
    max_tokens: int = 1024

    def __post_init__(self) -> None:
        if not any(m.role == "user" for m in self.messages):
            raise ValueError("request needs at least one user message")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class LlmResponse:
    text: str
    usage: TokenUsage


def _estimate_tokens(text: str) -> int:
    return (len(text) + 3) // 4 if text else 0


def _prompt_chars(req: LlmRequest) -> int:
    return sum(len(m.text) for m in req.messages)


def _check_context(req: LlmRequest, limit: int | None) -> None:
    if limit is not None and _prompt_chars(req) > limit:
        raise ContextTooLong(f"prompt of {_prompt_chars(req)} chars exceeds limit {limit}")


def _stub_response(req: LlmRequest, completion: str) -> LlmResponse:
    usage = TokenUsage(prompt=sum(_estimate_tokens(m.text) for m in req.messages),
                       completion=_estimate_tokens(completion))
    return LlmResponse(text=completion, usage=usage)


class ScriptedLlm:
    """Returns queued completions in order; used to script exact model behavior."""

    def __init__(self, completions: Sequence[str], model_id: str = "stub",
                 max_context_chars: int | None = None):
        self._queue = list(completions)
        self.model_id = model_id
        self.max_context_chars = max_context_chars
        self._lock = threading.Lock()

    def complete(self, req: LlmRequest) -> LlmResponse:
        _check_context(req, self.max_context_chars)
        with self._lock:
            if not self._queue:
                raise BackendUnavailable("scripted completions exhausted")
            completion = self._queue.pop(0)
        return _stub_response(req, completion)


class KeywordLlm:
    """Deterministic stub: first rule whose substring occurs in the prompt wins."""

    def __init__(self, rules: Sequence[tuple[str, str]], default: str,
                 model_id: str = "stub", max_context_chars: int | None = None):
        self.rules = list(rules)
        self.default = default
        self.model_id = model_id
        self.max_context_chars = max_context_chars

    def complete(self, req: LlmRequest) -> LlmResponse:
        _check_context(req, self.max_context_chars)
        prompt = "\n".join(m.text for m in req.messages)
        for needle, completion in self.rules:
            if needle in prompt:
                return _stub_response(req, completion)
        return _stub_response(req, self.default)


class FailingLlm:
    """Always raises; for exercising degradation paths."""

    def __init__(self, model_id: str = "stub"):
        self.model_id = model_id

    def complete(self, req: LlmRequest) -> LlmResponse:
        raise BackendUnavailable("llm configured to fail")


class CountingLlm:
    """Wraps a client, counting calls and retaining requests for assertions."""

    def __init__(self, inner):
        self.inner = inner
        self.model_id = getattr(inner, "model_id", "stub")
        self.calls = 0
        self.requests: list[LlmRequest] = []
        self._lock = threading.Lock()

    def complete(self, req: LlmRequest) -> LlmResponse:
        with self._lock:
            self.calls += 1
            self.requests.append(req)
        return self.inner.complete(req)


def _request_key_dict(req: LlmRequest) -> dict[str, Any]:
    return {
        "model": req.model_id,
        "messages": [
            {"role": m.role, "text": m.text, "images": list(m.image_hashes)}
            for m in req.messages
        ],
        "temperature": req.temperature,
        "seed": req.seed,
        "max_tokens": req.max_tokens,
    }


class HttpLlm:
    """OpenAI-style chat-completion client with record/replay through the cache."""

    BACKEND_ID = "llm"

    def __init__(self, config: BackendConfig, cache: ResponseCache,
                 transport: Transport | None = None):
        self.config = config
        self.cache = cache
        self.transport = transport
        self.model_id = config.llm.model_id

    def complete(self, req: LlmRequest) -> LlmResponse:
        _check_context(req, self.config.llm.max_context_chars)
        key = cache_key(self.BACKEND_ID, "complete", _request_key_dict(req))
        mode = self.config.mode

        if mode == BackendMode.REPLAY:
            value = self.cache.get(key)
            if value is None:
                raise CacheMiss(f"no recorded completion for model {req.model_id}")
            return LlmResponse(text=value["text"],
                               usage=TokenUsage(value["usage"]["prompt"],
                                                value["usage"]["completion"]))
        if mode == BackendMode.RECORD:
            value = self.cache.get(key)
            if value is not None:
                return LlmResponse(text=value["text"],
                                   usage=TokenUsage(value["usage"]["prompt"],
                                                    value["usage"]["completion"]))
        response = self._live_call(req)
        if mode == BackendMode.RECORD:
            self.cache.put(key, {"text": response.text,
                                 "usage": {"prompt": response.usage.prompt,
                                           "completion": response.usage.completion}},
                           backend_id=self.BACKEND_ID, op="complete")
        return response

    def _live_call(self, req: LlmRequest) -> LlmResponse:
        if self.transport is None or not self.config.llm.endpoint:
            raise BackendUnavailable("no live LLM endpoint configured")
        body = {
            "model": req.model_id,
            "messages": [
                {"role": m.role,
                 "content": m.text if not m.image_hashes
                 else [{"type": "text", "text": m.text}]
                 + [{"type": "image_hash", "hash": h} for h in m.image_hashes]}
                for m in req.messages
            ],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
        }
        if req.seed is not None:
            body["seed"] = req.seed
        headers = {}
        if self.config.llm.api_key:
            headers["Authorization"] = f"Bearer {self.config.llm.api_key}"
        try:
            raw = self.transport.request("POST", self.config.llm.endpoint,
                                         json_body=body, headers=headers)
        except TransportError as exc:
            raise BackendUnavailable(str(exc)) from exc
        try:
            text = raw["choices"][0]["message"]["content"]
            usage_raw = raw.get("usage", {})
            usage = TokenUsage(int(usage_raw.get("prompt_tokens", 0)),
                               int(usage_raw.get("completion_tokens", 0)))
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"malformed completion payload: {exc}") from exc
        return LlmResponse(text=text, usage=usage)
