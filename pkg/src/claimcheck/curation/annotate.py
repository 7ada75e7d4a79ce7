"""Topic quotas, flag-driven type annotation, and corpus statistics."""
from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from ..models import FlaggingRef, Label, MisinfoType, Post, Topic

log = logging.getLogger(__name__)


class MissingTopic(Exception):
    """A post that must be bucketed by topic has none."""


def topic_quota(fake_posts: Iterable[Post]) -> dict[Topic, int]:
    """Per-topic fake counts; the matched real selection must hit these."""
    quota: Counter[Topic] = Counter()
    for post in fake_posts:
        if post.topic is None:
            raise MissingTopic(f"post {post.id!r} has no topic")
        quota[post.topic] += 1
    return {topic: quota[topic]
            for topic in sorted(quota, key=lambda t: t.value)}


# Marker substrings (matched case-insensitively against flag text) and the
# failure type each one justifies. Assignment is strictly table-driven: no
# marker, no type. Markers were chosen to be unambiguous; vaguer wording
# ("misleading" alone, "fake") deliberately stays unmapped so those posts
# fall through to manual annotation.
RULE_TABLE: tuple[tuple[str, MisinfoType], ...] = (
    ("ai-generated", MisinfoType.Deepfake),
    ("ai generated", MisinfoType.Deepfake),
    ("deepfake", MisinfoType.Deepfake),
    ("manipulated", MisinfoType.Deepfake),
    ("photoshopped", MisinfoType.Deepfake),
    ("digitally altered", MisinfoType.Deepfake),
    ("synthetically generated", MisinfoType.Deepfake),
    ("different event", MisinfoType.ImageOOC),
    ("unrelated event", MisinfoType.ImageOOC),
    ("old photo", MisinfoType.ImageOOC),
    ("old image", MisinfoType.ImageOOC),
    ("originates from", MisinfoType.ImageOOC),
    ("out of context", MisinfoType.ImageOOC),
    ("different location", MisinfoType.ImageOOC),
    ("miscaptioned", MisinfoType.ImageOOC),
    ("false claim", MisinfoType.TextMisleading),
    ("claim is false", MisinfoType.TextMisleading),
    ("fabricated quote", MisinfoType.TextMisleading),
    ("misleading caption", MisinfoType.TextMisleading),
    ("debunked", MisinfoType.TextMisleading),
    ("no such statement", MisinfoType.TextMisleading),
)


@dataclass(frozen=True)
class FlagMatch:
    """Audit record: which marker in which flag justified which type."""

    misinfo_type: MisinfoType
    marker: str
    flag_url: str


@dataclass(frozen=True)
class FlagAssignment:
    types: frozenset[MisinfoType]
    matches: tuple[FlagMatch, ...]

    @property
    def needs_manual_review(self) -> bool:
        return not self.types


def ingest_flagging(post: Post, flags: Iterable[FlaggingRef]) -> FlagAssignment:
    """Derive failure types from community-flag text, rule table only.

    Every assigned type is backed by a FlagMatch naming the marker that
    triggered it. An empty result is legitimate and means the post needs a
    human annotator.
    """
    if post.label is not Label.Fake:
        raise ValueError(f"post {post.id!r} is not labeled fake")
    matches: list[FlagMatch] = []
    types: set[MisinfoType] = set()
    for flag in flags:
        text = flag.text.lower()
        for marker, mtype in RULE_TABLE:
            if marker in text:
                matches.append(FlagMatch(misinfo_type=mtype, marker=marker,
                                         flag_url=flag.url))
                types.add(mtype)
    if not types:
        log.debug("post %s: no flag marker matched, manual review", post.id)
    return FlagAssignment(types=frozenset(types), matches=tuple(matches))


@dataclass(frozen=True)
class DatasetStats:
    n_posts: int
    n_real: int
    n_fake: int
    n_unlabeled: int
    by_topic: Mapping[str, int] = field(default_factory=dict)
    by_month: Mapping[str, int] = field(default_factory=dict)
    by_type: Mapping[str, int] = field(default_factory=dict)


def dataset_stats(posts: Iterable[Post]) -> DatasetStats:
    """Histogram the corpus by topic, posting month, and failure type."""
    posts = list(posts)
    by_topic: Counter[str] = Counter()
    by_month: Counter[str] = Counter()
    by_type: Counter[str] = Counter()
    n_real = n_fake = 0
    for post in posts:
        if post.label is Label.Real:
            n_real += 1
        elif post.label is Label.Fake:
            n_fake += 1
        if post.topic is not None:
            by_topic[post.topic.value] += 1
        if post.date is not None:
            by_month[post.date.strftime("%Y-%m")] += 1
        for mtype in post.misinfo_types:
            by_type[mtype.value] += 1
    return DatasetStats(
        n_posts=len(posts), n_real=n_real, n_fake=n_fake,
        n_unlabeled=len(posts) - n_real - n_fake,
        by_topic=dict(sorted(by_topic.items())),
        by_month=dict(sorted(by_month.items())),
        by_type=dict(sorted(by_type.items())),
    )


def format_stats(stats: DatasetStats) -> str:
    lines = [f"posts: {stats.n_posts} (real {stats.n_real}, "
             f"fake {stats.n_fake}, unlabeled {stats.n_unlabeled})"]
    for heading, counts in (("topic", stats.by_topic),
                            ("month", stats.by_month),
                            ("type", stats.by_type)):
        lines.append(f"by {heading}:")
        if not counts:
            lines.append("  (none)")
        for name, count in counts.items():
            lines.append(f"  {name:<16}{count:>6}")
    return "\n".join(lines) + "\n"
