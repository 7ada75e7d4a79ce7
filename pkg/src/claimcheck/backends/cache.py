"""Record/replay cache for external-service responses.

One file per entry under a content-addressed directory plus an append-only
index file. Keys are digests of (backend id, op, canonical request), where
canonicalization sorts fields recursively and collapses whitespace in query
strings, so logically identical requests share a recording.
"""
from __future__ import annotations

import datetime as dt
import hashlib
import json
import threading
from pathlib import Path
from typing import Any


class BackendMode:
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"

    ALL = (LIVE, RECORD, REPLAY)


def normalize_query(query: str) -> str:
    return " ".join(query.split())


def _canonicalize(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _canonicalize(value[k]) for k in sorted(value)}
    if isinstance(value, (list, tuple)):
        return [_canonicalize(v) for v in value]
    return value


def cache_key(backend_id: str, op: str, request: dict[str, Any]) -> str:
    req = _canonicalize(request)
    if isinstance(req.get("query"), str):
        req["query"] = normalize_query(req["query"])
    blob = json.dumps({"backend": backend_id, "op": op, "request": req},
                      ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class ResponseCache:
    """File-backed response store. Writes are serialized; reads are lock-free."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._write_lock = threading.Lock()

    def _entry_path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    @property
    def index_path(self) -> Path:
        return self.root / "index.jsonl"

    def get(self, key: str) -> Any | None:
        path = self._entry_path(key)
        if not path.exists():
            return None
        with path.open("r", encoding="utf-8") as fp:
            return json.load(fp)["value"]

    def put(self, key: str, value: Any, *, backend_id: str, op: str,
            recorded_at: str | None = None) -> None:
        stamp = recorded_at or dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
        entry = {"key": key, "backend": backend_id, "op": op,
                 "recorded_at": stamp, "value": value}
        path = self._entry_path(key)
        with self._write_lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", encoding="utf-8") as fp:
                json.dump(entry, fp, ensure_ascii=False, indent=1)
            self.root.mkdir(parents=True, exist_ok=True)
            with self.index_path.open("a", encoding="utf-8") as fp:
                fp.write(json.dumps({"key": key, "backend": backend_id, "op": op,
                                     "recorded_at": stamp},
                                    ensure_ascii=False) + "\n")

    def recorded_at(self, key: str) -> str | None:
        path = self._entry_path(key)
        if not path.exists():
            return None
        with path.open("r", encoding="utf-8") as fp:
            return json.load(fp).get("recorded_at")
