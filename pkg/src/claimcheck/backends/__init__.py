"""Clients for search engines, LLM completion, and image embedding, with a
record/replay cache for deterministic offline runs."""
from .cache import BackendMode, ResponseCache, cache_key, normalize_query
from .config import BackendConfig, EngineConfig, LlmEndpointConfig, load_backend_config
from .embeddings import (CachingEmbedder, ImageEmbedder, ToyImageEmbedder,
                         load_sidecar_embeddings, write_sidecar_embeddings)
from .errors import (BackendError, BackendUnavailable, CacheMiss, ContextTooLong,
                     QuotaExceeded, TransportError, UnreadableImage)
from .images import ImageStore
from .llm import (CountingLlm, FailingLlm, HttpLlm, KeywordLlm, LlmMessage,
                  LlmRequest, LlmResponse, ScriptedLlm)
from .search import Engine, SearchClient, SearchOp, SearchRequest, canonical_payload
from .transport import CountingTransport, HttpTransport, ScriptedTransport, Transport

__all__ = [
    "BackendMode", "ResponseCache", "cache_key", "normalize_query",
    "BackendConfig", "EngineConfig", "LlmEndpointConfig", "load_backend_config",
    "CachingEmbedder", "ImageEmbedder", "ToyImageEmbedder",
    "load_sidecar_embeddings", "write_sidecar_embeddings",
    "BackendError", "BackendUnavailable", "CacheMiss", "ContextTooLong",
    "QuotaExceeded", "TransportError", "UnreadableImage",
    "ImageStore",
    "CountingLlm", "FailingLlm", "HttpLlm", "KeywordLlm", "LlmMessage",
    "LlmRequest", "LlmResponse", "ScriptedLlm",
    "Engine", "SearchClient", "SearchOp", "SearchRequest", "canonical_payload",
    "CountingTransport", "HttpTransport", "ScriptedTransport", "Transport",
]
