"""Content-addressed image byte store. Files are named by sha256 of their bytes."""
from __future__ import annotations

from pathlib import Path

from ..models import bytes_hash


class ImageStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    def path_for(self, image_hash: str) -> Path:
        return self.root / image_hash[:2] / image_hash

    def get(self, image_hash: str) -> bytes | None:
        path = self.path_for(image_hash)
        if not path.exists():
            return None
        return path.read_bytes()

    def put(self, data: bytes) -> str:
        digest = bytes_hash(data)
        path = self.path_for(digest)
        if not path.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
        return digest
