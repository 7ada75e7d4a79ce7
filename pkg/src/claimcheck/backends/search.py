"""Search-engine clients (text / image / reverse-image / news) with record/replay.

Two engine slots are configured: A (Google-compatible JSON shape) and B
(DuckDuckGo-compatible shape). Live responses are mapped to one canonical
payload before caching, so replay never depends on engine quirks:

    {"results": [{"url", "title", "snippet", "image_url"?, "image_hash"?,
                  "published_date"?}, ...]}

The result-count budget ``k`` is applied at return time and is not part of
the cache key, so one recording serves any budget.
"""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from enum import Enum
from typing import Any

from ..models import EvidenceItem, EvidenceKind, ImageRef
from .cache import BackendMode, ResponseCache, cache_key, normalize_query
from .config import BackendConfig, EngineConfig
from .errors import (BackendUnavailable, CacheMiss, QuotaExceeded,
                     TransportError, UnreadableImage)
from .images import ImageStore
from .transport import Transport


class Engine(Enum):
    A = "a"
    B = "b"


class SearchOp(Enum):
    TextSearch = "text_search"
    ImageSearch = "image_search"
    ReverseImageSearch = "reverse_image_search"
    NewsSearch = "news_search"


_KIND_BY_OP = {
    SearchOp.TextSearch: EvidenceKind.Text,
    SearchOp.ImageSearch: EvidenceKind.Image,
    SearchOp.ReverseImageSearch: EvidenceKind.Text,
    SearchOp.NewsSearch: EvidenceKind.News,
}


@dataclass(frozen=True)
class SearchRequest:
    engine: Engine
    op: SearchOp
    query: str
    k: int = 5

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not self.query.strip():
            raise ValueError("query must be nonempty")


def _pick(d: dict[str, Any], *names: str) -> Any:
    for name in names:
        if d.get(name) not in (None, ""):
            return d[name]
    return None


def canonical_payload(raw: Any) -> dict[str, Any]:
    """Map an engine response (or an already-canonical payload) to canonical form."""
    if isinstance(raw, dict):
        rows = raw.get("results") or raw.get("items") or []
    elif isinstance(raw, list):
        rows = raw
    else:
        rows = []
    results = []
    for row in rows:
        if not isinstance(row, dict):
            continue
        url = _pick(row, "url", "link", "href")
        if not url:
            continue
        entry: dict[str, Any] = {
            "url": url,
            "title": _pick(row, "title") or "",
            "snippet": _pick(row, "snippet", "body", "description") or "",
        }
        image_url = _pick(row, "image_url", "image", "thumbnail")
        if image_url:
            entry["image_url"] = image_url
        if row.get("image_hash"):
            entry["image_hash"] = row["image_hash"]
        published = _pick(row, "published_date", "date", "published")
        if published:
            entry["published_date"] = str(published)
        results.append(entry)
    return {"results": results}


def _items_from_payload(payload: dict[str, Any], op: SearchOp, k: int) -> list[EvidenceItem]:
    kind = _KIND_BY_OP[op]
    items: list[EvidenceItem] = []
    seen_images: set[str] = set()
    for row in payload.get("results", []):
        image_ref = None
        if kind is EvidenceKind.Image:
            image_hash = row.get("image_hash")
            image_url = row.get("image_url")
            if not (image_hash or image_url):
                continue
            dedup_key = image_hash or image_url
            if dedup_key in seen_images:
                continue
            seen_images.add(dedup_key)
            image_ref = ImageRef(hash=image_hash, url=image_url)
        published = None
        if row.get("published_date"):
            try:
                published = dt.date.fromisoformat(row["published_date"][:10])
            except ValueError:
                published = None
        items.append(EvidenceItem(
            kind=kind,
            source_url=row["url"],
            title=row.get("title", ""),
            body=row.get("snippet", ""),
            rank=len(items) + 1,
            image_ref=image_ref,
            published_date=published,
        ))
        if len(items) >= k:
            break
    return items


class SearchClient:
    """Uniform client over both engines, honoring the configured backend mode."""

    def __init__(self, config: BackendConfig, cache: ResponseCache,
                 transport: Transport | None = None,
                 image_store: ImageStore | None = None):
        self.config = config
        self.cache = cache
        self.transport = transport
        self.image_store = image_store

    def _engine_config(self, engine: Engine) -> EngineConfig:
        return self.config.engine_a if engine is Engine.A else self.config.engine_b

    def engine_id(self, engine: Engine) -> str:
        return self._engine_config(engine).id

    def is_replay(self) -> bool:
        return self.config.mode == BackendMode.REPLAY

    def search(self, req: SearchRequest) -> list[EvidenceItem]:
        engine_cfg = self._engine_config(req.engine)
        key = cache_key(engine_cfg.id, req.op.value,
                        {"query": normalize_query(req.query)})
        mode = self.config.mode

        if mode == BackendMode.REPLAY:
            payload = self.cache.get(key)
            if payload is None:
                raise CacheMiss(f"no recording for {req.op.value} {req.query!r} "
                                f"on {engine_cfg.id}")
            return _items_from_payload(payload, req.op, req.k)

        if mode == BackendMode.RECORD:
            payload = self.cache.get(key)
            if payload is not None:
                return _items_from_payload(payload, req.op, req.k)

        payload = self._live_call(engine_cfg, req)
        if mode == BackendMode.RECORD:
            self.cache.put(key, payload, backend_id=engine_cfg.id, op=req.op.value)
        return _items_from_payload(payload, req.op, req.k)

    def _live_call(self, engine_cfg: EngineConfig, req: SearchRequest) -> dict[str, Any]:
        if self.transport is None or not engine_cfg.endpoint:
            raise BackendUnavailable(
                f"engine {engine_cfg.id} has no live endpoint configured")
        params: dict[str, Any] = {"type": req.op.value}
        json_body = None
        if req.op is SearchOp.ReverseImageSearch:
            if self.image_store is None:
                raise UnreadableImage("no image store configured for reverse search")
            data = self.image_store.get(req.query)
            if data is None:
                raise UnreadableImage(f"image bytes missing for {req.query}")
            import base64
            json_body = {"image": base64.b64encode(data).decode("ascii")}
            params["image_hash"] = req.query
        else:
            params["q"] = normalize_query(req.query)
        if engine_cfg.api_key:
            params["key"] = engine_cfg.api_key
        try:
            method = "POST" if json_body is not None else "GET"
            raw = self.transport.request(method, engine_cfg.endpoint,
                                         params=params, json_body=json_body)
        except TransportError as exc:
            if exc.status == 429:
                raise QuotaExceeded(str(exc)) from exc
            raise BackendUnavailable(str(exc)) from exc
        return canonical_payload(raw)

    # Named ops, enforcing the op-specific preconditions.

    def text_search(self, req: SearchRequest) -> list[EvidenceItem]:
        assert req.op is SearchOp.TextSearch
        return self.search(req)

    def image_search(self, req: SearchRequest) -> list[EvidenceItem]:
        assert req.op is SearchOp.ImageSearch
        return self.search(req)

    def reverse_image_search(self, req: SearchRequest) -> list[EvidenceItem]:
        assert req.op is SearchOp.ReverseImageSearch
        return self.search(req)

    def news_search(self, req: SearchRequest) -> list[EvidenceItem]:
        assert req.op is SearchOp.NewsSearch
        return self.search(req)
