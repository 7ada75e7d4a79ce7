"""Shared domain types: posts, evidence, verdicts, and their canonical JSON forms.

All types are frozen dataclasses or enums and are safe to share between
concurrent tasks. Serialization uses a fixed field order and omits absent
optionals, so serialize-then-deserialize is the identity on valid instances.
"""
from __future__ import annotations

import datetime as dt
import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping

from .webdomains import registrable_domain


class ValidationError(ValueError):
    """Base class for record validation failures."""


class MissingField(ValidationError):
    pass


class BadEnum(ValidationError):
    pass


class BadDate(ValidationError):
    pass


class EmptyImages(ValidationError):
    pass


class TypeOnRealPost(ValidationError):
    """misinfo_types set while the post is labeled real."""


class Label(Enum):
    Real = "real"
    Fake = "fake"

    @classmethod
    def parse(cls, raw: str) -> "Label":
        try:
            return cls(str(raw).strip().lower())
        except ValueError:
            raise BadEnum(f"unknown label: {raw!r}") from None


class Topic(Enum):
    Politics = "politics"
    Society = "society"
    Entertainment = "entertainment"
    Science = "science"
    History = "history"
    Nature = "nature"
    Sports = "sports"

    @classmethod
    def parse(cls, raw: str) -> "Topic":
        try:
            return cls(str(raw).strip().lower())
        except ValueError:
            raise BadEnum(f"unknown topic: {raw!r}") from None


class MisinfoType(Enum):
    Deepfake = "deepfake"
    ImageOOC = "image_ooc"
    TextMisleading = "text_misleading"

    @classmethod
    def parse(cls, raw: str) -> "MisinfoType":
        try:
            return cls(str(raw).strip().lower())
        except ValueError:
            raise BadEnum(f"unknown misinfo type: {raw!r}") from None


class EvidenceKind(Enum):
    Text = "text"
    Image = "image"
    News = "news"


class ReasoningMethod(Enum):
    CoT = "cot"
    Ensemble = "ensemble"
    SelfConsistency = "self_consistency"
    MultiStep = "multi_step"


@dataclass(frozen=True)
class ImageRef:
    """Reference to an image by content hash, local path, and/or URL."""

    hash: str | None = None
    path: str | None = None
    url: str | None = None

    def __post_init__(self) -> None:
        if not (self.hash or self.path or self.url):
            raise MissingField("image reference needs a hash, path, or url")


@dataclass(frozen=True)
class FlaggingRef:
    """A fact-checker's flagging post: URL plus its free-text evidence."""

    url: str
    text: str


@dataclass(frozen=True)
class Post:
    """One social-media item: text claim plus supporting images and metadata."""

    id: str
    text: str
    images: tuple[ImageRef, ...]
    author_id: str = ""
    source_url: str = ""
    date: dt.date | None = None
    topic: Topic | None = None
    label: Label | None = None
    misinfo_types: frozenset[MisinfoType] = frozenset()
    flagging: tuple[FlaggingRef, ...] = ()

    def __post_init__(self) -> None:
        if not self.images:
            raise EmptyImages(f"post {self.id!r} has no images")
        if self.label is Label.Real and self.misinfo_types:
            raise TypeOnRealPost(f"post {self.id!r} is real but carries misinfo types")


@dataclass(frozen=True)
class EvidenceItem:
    """A single retrieved evidence record.

    ``strategy_id`` 0 means not yet stamped by a retrieval strategy; inside
    an EvidenceBundle it must be 1..8 and match the group key.
    """

    kind: EvidenceKind
    source_url: str
    title: str = ""
    body: str = ""
    strategy_id: int = 0
    rank: int = 1
    domain: str = ""
    image_ref: ImageRef | None = None
    published_date: dt.date | None = None

    def __post_init__(self) -> None:
        if not 0 <= self.strategy_id <= 8:
            raise ValidationError(f"strategy_id out of range: {self.strategy_id}")
        if self.rank < 1:
            raise ValidationError(f"rank must be >= 1, got {self.rank}")
        if self.kind is EvidenceKind.Image and self.image_ref is None:
            raise ValidationError("image evidence needs an image_ref")
        if not self.domain:
            object.__setattr__(self, "domain", registrable_domain(self.source_url))


@dataclass(frozen=True)
class ProvenanceRecord:
    """Which backend produced a strategy's results, and when."""

    strategy_id: int
    backend: str
    timestamp: str = ""


@dataclass(frozen=True)
class EvidenceBundle:
    """Evidence for one post, grouped by retrieval strategy.

    ``groups`` is treated as immutable after construction.
    """

    post_id: str
    groups: dict[int, tuple[EvidenceItem, ...]] = field(default_factory=dict)
    provenance: tuple[ProvenanceRecord, ...] = ()
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for sid, items in self.groups.items():
            if not 1 <= sid <= 8:
                raise ValidationError(f"bundle group key out of range: {sid}")
            seen_ranks = set()
            for item in items:
                if item.strategy_id != sid:
                    raise ValidationError(
                        f"item strategy_id {item.strategy_id} in group {sid}"
                    )
                if item.rank in seen_ranks:
                    raise ValidationError(f"duplicate rank {item.rank} in group {sid}")
                seen_ranks.add(item.rank)
            if list(i.rank for i in items) != sorted(i.rank for i in items):
                raise ValidationError(f"group {sid} not sorted by rank")

    def all_items(self) -> list[EvidenceItem]:
        """Items in deterministic (strategy_id, rank) order."""
        out: list[EvidenceItem] = []
        for sid in sorted(self.groups):
            out.extend(self.groups[sid])
        return out


@dataclass(frozen=True)
class TokenUsage:
    prompt: int = 0
    completion: int = 0

    def __post_init__(self) -> None:
        if self.prompt < 0 or self.completion < 0:
            raise ValidationError("token counts must be nonnegative")

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(self.prompt + other.prompt, self.completion + other.completion)


@dataclass(frozen=True)
class IntermediateJudgment:
    """Per-evidence-group judgment produced during multi-step reasoning."""

    strategy_id: int
    label: Label | None
    confidence: int | None
    rationale: str
    available: bool = True


@dataclass(frozen=True)
class Verdict:
    """Detector output for one post."""

    label: Label
    confidence: int
    rationale: str
    reasoning_method: ReasoningMethod
    model_id: str = ""
    token_usage: TokenUsage = TokenUsage()
    intermediates: tuple[IntermediateJudgment, ...] | None = None
    retry_count: int = 0
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not 0 <= self.confidence <= 100:
            raise ValidationError(f"confidence out of range: {self.confidence}")
        has_intermediates = self.intermediates is not None
        if has_intermediates != (self.reasoning_method is ReasoningMethod.MultiStep):
            raise ValidationError("intermediates present iff reasoning method is multi_step")


def text_hash(text: str) -> str:
    """Content hash used for image bytes and post-text identity."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def bytes_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def canonical_json(record: Mapping[str, Any] | list | tuple) -> str:
    """Deterministic JSON: insertion order preserved, no extra whitespace."""
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


# ---------------------------------------------------------------------------
# Canonical record forms (fixed field order, absent optionals omitted)
# ---------------------------------------------------------------------------

def _parse_date(raw: Any, *, field_name: str = "date") -> dt.date:
    if isinstance(raw, dt.date):
        return raw
    try:
        return dt.date.fromisoformat(str(raw))
    except ValueError:
        raise BadDate(f"unparseable {field_name}: {raw!r}") from None


def image_ref_to_record(ref: ImageRef) -> dict[str, Any]:
    rec: dict[str, Any] = {}
    if ref.hash:
        rec["hash"] = ref.hash
    if ref.path:
        rec["path"] = ref.path
    if ref.url:
        rec["url"] = ref.url
    return rec


def image_ref_from_record(rec: Mapping[str, Any]) -> ImageRef:
    return ImageRef(hash=rec.get("hash"), path=rec.get("path"), url=rec.get("url"))


def post_to_record(post: Post) -> dict[str, Any]:
    rec: dict[str, Any] = {
        "id": post.id,
        "text": post.text,
        "images": [image_ref_to_record(i) for i in post.images],
        "author_id": post.author_id,
        "source_url": post.source_url,
    }
    if post.date is not None:
        rec["date"] = post.date.isoformat()
    if post.topic is not None:
        rec["topic"] = post.topic.value
    if post.label is not None:
        rec["label"] = post.label.value
    if post.misinfo_types:
        rec["misinfo_types"] = sorted(t.value for t in post.misinfo_types)
    if post.flagging:
        rec["flagging"] = [{"url": f.url, "text": f.text} for f in post.flagging]
    return rec


def validate_post(raw: Mapping[str, Any], *, today: dt.date | None = None) -> Post:
    """Build a validated Post from a parsed dataset record.

    Normalizes topic/label/type strings case-insensitively and dates to
    ISO-8601. ``today`` bounds the ingest-time future-date check (defaults
    to the current date).
    """
    for name in ("id", "text", "images"):
        if name not in raw or raw[name] in (None, ""):
            raise MissingField(f"missing field: {name}")
    images_raw = raw["images"]
    if not isinstance(images_raw, Iterable) or isinstance(images_raw, (str, bytes)):
        raise ValidationError("images must be a list")
    images = tuple(image_ref_from_record(i) for i in images_raw)
    if not images:
        raise EmptyImages(f"post {raw['id']!r} has no images")

    date: dt.date | None = None
    if raw.get("date") not in (None, ""):
        date = _parse_date(raw["date"])
        limit = today if today is not None else dt.date.today()
        if date > limit:
            raise BadDate(f"post {raw['id']!r} dated in the future: {date.isoformat()}")

    topic = Topic.parse(raw["topic"]) if raw.get("topic") not in (None, "") else None
    label = Label.parse(raw["label"]) if raw.get("label") not in (None, "") else None
    misinfo_types = frozenset(MisinfoType.parse(t) for t in raw.get("misinfo_types") or ())
    if label is Label.Real and misinfo_types:
        raise TypeOnRealPost(f"post {raw['id']!r} is real but carries misinfo types")
    flagging = tuple(
        FlaggingRef(url=f.get("url", ""), text=f.get("text", ""))
        for f in raw.get("flagging") or ()
    )
    return Post(
        id=str(raw["id"]),
        text=str(raw["text"]),
        images=images,
        author_id=str(raw.get("author_id", "")),
        source_url=str(raw.get("source_url", "")),
        date=date,
        topic=topic,
        label=label,
        misinfo_types=misinfo_types,
        flagging=flagging,
    )


def evidence_item_to_record(item: EvidenceItem) -> dict[str, Any]:
    rec: dict[str, Any] = {
        "kind": item.kind.value,
        "strategy_id": item.strategy_id,
        "rank": item.rank,
        "source_url": item.source_url,
        "domain": item.domain,
        "title": item.title,
        "body": item.body,
    }
    if item.image_ref is not None:
        rec["image_ref"] = image_ref_to_record(item.image_ref)
    if item.published_date is not None:
        rec["published_date"] = item.published_date.isoformat()
    return rec


def evidence_item_from_record(rec: Mapping[str, Any]) -> EvidenceItem:
    image_ref = None
    if rec.get("image_ref"):
        image_ref = image_ref_from_record(rec["image_ref"])
    published = None
    if rec.get("published_date"):
        published = _parse_date(rec["published_date"], field_name="published_date")
    try:
        kind = EvidenceKind(rec["kind"])
    except (KeyError, ValueError):
        raise BadEnum(f"unknown evidence kind: {rec.get('kind')!r}") from None
    return EvidenceItem(
        kind=kind,
        source_url=rec.get("source_url", ""),
        title=rec.get("title", ""),
        body=rec.get("body", ""),
        strategy_id=int(rec.get("strategy_id", 0)),
        rank=int(rec.get("rank", 1)),
        domain=rec.get("domain", ""),
        image_ref=image_ref,
        published_date=published,
    )


def bundle_to_record(bundle: EvidenceBundle) -> dict[str, Any]:
    return {
        "post_id": bundle.post_id,
        "groups": {
            str(sid): [evidence_item_to_record(i) for i in bundle.groups[sid]]
            for sid in sorted(bundle.groups)
        },
        "provenance": [
            {"strategy_id": p.strategy_id, "backend": p.backend, "timestamp": p.timestamp}
            for p in bundle.provenance
        ],
        "warnings": list(bundle.warnings),
    }


def bundle_from_record(rec: Mapping[str, Any]) -> EvidenceBundle:
    groups = {
        int(sid): tuple(evidence_item_from_record(i) for i in items)
        for sid, items in rec.get("groups", {}).items()
    }
    provenance = tuple(
        ProvenanceRecord(int(p["strategy_id"]), p.get("backend", ""), p.get("timestamp", ""))
        for p in rec.get("provenance", ())
    )
    return EvidenceBundle(
        post_id=rec["post_id"],
        groups=groups,
        provenance=provenance,
        warnings=tuple(rec.get("warnings", ())),
    )


def verdict_to_record(verdict: Verdict) -> dict[str, Any]:
    rec: dict[str, Any] = {
        "label": verdict.label.value,
        "confidence": verdict.confidence,
        "rationale": verdict.rationale,
        "reasoning_method": verdict.reasoning_method.value,
        "model_id": verdict.model_id,
        "token_usage": {"prompt": verdict.token_usage.prompt,
                        "completion": verdict.token_usage.completion},
        "retry_count": verdict.retry_count,
    }
    if verdict.intermediates is not None:
        rec["intermediates"] = [
            {
                "strategy_id": j.strategy_id,
                "label": j.label.value if j.label is not None else None,
                "confidence": j.confidence,
                "rationale": j.rationale,
                "available": j.available,
            }
            for j in verdict.intermediates
        ]
    if verdict.warnings:
        rec["warnings"] = list(verdict.warnings)
    return rec


def verdict_from_record(rec: Mapping[str, Any]) -> Verdict:
    intermediates = None
    if "intermediates" in rec:
        intermediates = tuple(
            IntermediateJudgment(
                strategy_id=int(j["strategy_id"]),
                label=Label.parse(j["label"]) if j.get("label") else None,
                confidence=j.get("confidence"),
                rationale=j.get("rationale", ""),
                available=bool(j.get("available", True)),
            )
            for j in rec["intermediates"]
        )
    usage = rec.get("token_usage", {})
    return Verdict(
        label=Label.parse(rec["label"]),
        confidence=int(rec["confidence"]),
        rationale=rec.get("rationale", ""),
        reasoning_method=ReasoningMethod(rec["reasoning_method"]),
        model_id=rec.get("model_id", ""),
        token_usage=TokenUsage(int(usage.get("prompt", 0)), int(usage.get("completion", 0))),
        intermediates=intermediates,
        retry_count=int(rec.get("retry_count", 0)),
        warnings=tuple(rec.get("warnings", ())),
    )
