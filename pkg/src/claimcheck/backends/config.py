"""Backend configuration: mode, cache root, engine endpoints, and API keys.

Precedence: explicit arguments > environment variables > config file.
Endpoints and keys live in the config file only, never in code.

Environment variables:
    CLAIMCHECK_BACKEND_MODE   live | record | replay
    CLAIMCHECK_CACHE_ROOT     cache directory
    CLAIMCHECK_CONFIG         path to the JSON config file

Config file schema (all sections optional)::

    {
      "mode": "replay",
      "cache_root": ".claimcheck-cache",
      "image_store": "images/",
      "engines": {
        "a": {"id": "engine-a", "endpoint": "https://...", "api_key": "..."},
        "b": {"id": "engine-b", "endpoint": "https://...", "api_key": "..."}
      },
      "llm": {"endpoint": "https://.../chat/completions", "api_key": "...",
              "model_id": "gpt-4o", "max_context_chars": 400000},
      "embedding": {"dim": 32}
    }
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .cache import BackendMode

ENV_MODE = "CLAIMCHECK_BACKEND_MODE"
ENV_CACHE_ROOT = "CLAIMCHECK_CACHE_ROOT"
ENV_CONFIG = "CLAIMCHECK_CONFIG"


@dataclass(frozen=True)
class EngineConfig:
    id: str
    endpoint: str = ""
    api_key: str = ""


@dataclass(frozen=True)
class LlmEndpointConfig:
    endpoint: str = ""
    api_key: str = ""
    model_id: str = "stub"
    max_context_chars: int = 400_000


@dataclass(frozen=True)
class BackendConfig:
    mode: str = BackendMode.REPLAY
    cache_root: str = ".claimcheck-cache"
    image_store: str = ""
    engine_a: EngineConfig = field(default_factory=lambda: EngineConfig(id="engine-a"))
    engine_b: EngineConfig = field(default_factory=lambda: EngineConfig(id="engine-b"))
    llm: LlmEndpointConfig = field(default_factory=LlmEndpointConfig)
    embedding_dim: int = 32

    def __post_init__(self) -> None:
        if self.mode not in BackendMode.ALL:
            raise ValueError(f"unknown backend mode: {self.mode!r}")


def load_backend_config(path: str | Path | None = None, *,
                        mode: str | None = None,
                        cache_root: str | None = None) -> BackendConfig:
    """Assemble a BackendConfig from file + environment + explicit overrides."""
    file_path = path or os.environ.get(ENV_CONFIG)
    data: dict[str, Any] = {}
    if file_path:
        with open(file_path, "r", encoding="utf-8") as fp:
            data = json.load(fp)

    engines = data.get("engines", {})

    def engine(slot: str, default_id: str) -> EngineConfig:
        cfg = engines.get(slot, {})
        return EngineConfig(id=cfg.get("id", default_id),
                            endpoint=cfg.get("endpoint", ""),
                            api_key=cfg.get("api_key", ""))

    llm_cfg = data.get("llm", {})
    resolved_mode = mode or os.environ.get(ENV_MODE) or data.get("mode") or BackendMode.REPLAY
    resolved_root = (cache_root or os.environ.get(ENV_CACHE_ROOT)
                     or data.get("cache_root") or ".claimcheck-cache")
    return BackendConfig(
        mode=resolved_mode,
        cache_root=resolved_root,
        image_store=data.get("image_store", ""),
        engine_a=engine("a", "engine-a"),
        engine_b=engine("b", "engine-b"),
        llm=LlmEndpointConfig(
            endpoint=llm_cfg.get("endpoint", ""),
            api_key=llm_cfg.get("api_key", ""),
            model_id=llm_cfg.get("model_id", "stub"),
            max_context_chars=int(llm_cfg.get("max_context_chars", 400_000)),
        ),
        embedding_dim=int(data.get("embedding", {}).get("dim", 32)),
    )
