"""Small builders shared across test modules."""
from __future__ import annotations

import datetime as dt

from claimcheck.models import (EvidenceBundle, EvidenceItem, EvidenceKind,
                               FlaggingRef, ImageRef, Label, MisinfoType,
                               Post, Topic, bytes_hash)


def make_post(post_id: str = "p1", text: str = "a claim about an event",
              label: str | None = None, topic: str | None = None,
              types: tuple[str, ...] = (), n_images: int = 1,
              flags: tuple[tuple[str, str], ...] = (),
              date: dt.date | None = None) -> Post:
    return Post(
        id=post_id,
        text=text,
        images=tuple(ImageRef(hash=bytes_hash(f"{post_id}/{i}".encode()))
                     for i in range(n_images)),
        date=date,
        topic=Topic.parse(topic) if topic else None,
        label=Label.parse(label) if label else None,
        misinfo_types=frozenset(MisinfoType.parse(t) for t in types),
        flagging=tuple(FlaggingRef(url=u, text=t) for u, t in flags),
    )


def make_item(sid: int, rank: int, url: str = "https://site.example/a",
              body: str = "", title: str = "", kind: EvidenceKind = EvidenceKind.Text,
              image_hash: str | None = None) -> EvidenceItem:
    ref = ImageRef(hash=image_hash) if image_hash else None
    if kind is EvidenceKind.Image and ref is None:
        ref = ImageRef(hash=bytes_hash(url.encode()))
    return EvidenceItem(kind=kind, source_url=url, title=title, body=body,
                        strategy_id=sid, rank=rank, image_ref=ref)


def make_bundle(post_id: str = "p1",
                **groups: tuple[EvidenceItem, ...]) -> EvidenceBundle:
    """make_bundle(s1=(item, ...), s3=(item, ...)) with keys 's<id>'."""
    parsed = {int(name[1:]): tuple(items) for name, items in groups.items()}
    return EvidenceBundle(post_id=post_id, groups=parsed)
