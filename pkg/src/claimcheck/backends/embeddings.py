"""Image-embedding backends and the sidecar embeddings file format.

The toy embedder derives a reproducible unit vector from the image's content
hash, so curation and tests run without any model weights. Real embeddings
are supplied through a sidecar file (JSONL: a header line declaring the
dimension, then one ``{"id", "vec"}`` line per image).
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Protocol

import numpy as np

from .cache import BackendMode, ResponseCache, cache_key
from .errors import CacheMiss


class ImageEmbedder(Protocol):
    dim: int

    def embed(self, image_hash: str) -> np.ndarray: ...


class ToyImageEmbedder:
    """Hash-seeded pseudorandom unit vectors; identical input, identical output."""

    def __init__(self, dim: int = 32):
        self.dim = dim

    def embed(self, image_hash: str) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(image_hash.encode("utf-8")).digest()[:8], "big")
        rng = np.random.default_rng(seed)
        vec = rng.standard_normal(self.dim)
        norm = np.linalg.norm(vec)
        while norm == 0.0:  # unreachable in practice, but keeps the contract total
            vec = rng.standard_normal(self.dim)
            norm = np.linalg.norm(vec)
        return vec / norm


class CachingEmbedder:
    """Record/replay wrapper around any embedder."""

    BACKEND_ID = "embed"

    def __init__(self, inner: ImageEmbedder, cache: ResponseCache, mode: str):
        self.inner = inner
        self.cache = cache
        self.mode = mode
        self.dim = inner.dim

    def embed(self, image_hash: str) -> np.ndarray:
        key = cache_key(self.BACKEND_ID, "embed_image", {"hash": image_hash})
        if self.mode == BackendMode.REPLAY:
            value = self.cache.get(key)
            if value is None:
                raise CacheMiss(f"no recorded embedding for {image_hash}")
            return np.asarray(value, dtype=np.float64)
        if self.mode == BackendMode.RECORD:
            value = self.cache.get(key)
            if value is not None:
                return np.asarray(value, dtype=np.float64)
        vec = self.inner.embed(image_hash)
        if self.mode == BackendMode.RECORD:
            self.cache.put(key, [float(x) for x in vec],
                           backend_id=self.BACKEND_ID, op="embed_image")
        return vec


def write_sidecar_embeddings(path: str | Path, vectors: dict[str, np.ndarray]) -> None:
    dims = {len(v) for v in vectors.values()}
    if len(dims) > 1:
        raise ValueError(f"mixed embedding dimensions: {sorted(dims)}")
    dim = dims.pop() if dims else 0
    with open(path, "w", encoding="utf-8") as fp:
        fp.write(json.dumps({"dim": dim}) + "\n")
        for key in sorted(vectors):
            fp.write(json.dumps({"id": key, "vec": [float(x) for x in vectors[key]]}) + "\n")


def load_sidecar_embeddings(path: str | Path) -> tuple[dict[str, np.ndarray], int]:
    """Read a sidecar file; vectors must match the declared dim and be unit-norm."""
    with open(path, "r", encoding="utf-8") as fp:
        header = json.loads(fp.readline())
        dim = int(header["dim"])
        out: dict[str, np.ndarray] = {}
        for lineno, line in enumerate(fp, start=2):
            if not line.strip():
                continue
            rec = json.loads(line)
            vec = np.asarray(rec["vec"], dtype=np.float64)
            if vec.shape != (dim,):
                raise ValueError(f"line {lineno}: vector dim {vec.shape} != header {dim}")
            norm = np.linalg.norm(vec)
            if abs(norm - 1.0) > 1e-6:
                raise ValueError(f"line {lineno}: vector for {rec['id']!r} is not unit-norm")
            out[rec["id"]] = vec
    return out, dim
