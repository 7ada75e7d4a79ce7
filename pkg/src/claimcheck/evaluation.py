"""Dataset loading, end-to-end evaluation runs, and metric computation.

A dataset is a JSONL file of post records, optionally with a split sidecar
(JSONL of ``{"id", "split"}``) that must cover exactly the same ids. Metrics
are percentages at one decimal; a class with no members yields ``None``
("undefined"), never a fabricated zero. Fake-only type breakdowns are
multi-label: a post tagged with two failure types contributes to both rows.
"""
from __future__ import annotations

import json
import logging
import statistics
from collections.abc import Iterable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .backends.errors import BackendError
from .models import (EvidenceBundle, Label, MisinfoType, Post, ReasoningMethod,
                     TokenUsage, ValidationError, bytes_hash, canonical_json,
                     validate_post)
from .postprocess import DomainPolicy, domain_filter, extract_evidence
from .reasoning import MethodFailed, ReasonerConfig, reason
from .retrieval import AllStrategiesFailed, RetrievalPlan, retrieve

log = logging.getLogger(__name__)

ERROR_POLICIES = ("count_as_wrong", "exclude")


class ParseError(Exception):
    """A dataset line could not be turned into a valid post."""


class SplitMismatch(Exception):
    """Split sidecar and post file disagree on the set of ids."""


@dataclass(frozen=True)
class Dataset:
    posts: tuple[Post, ...]
    splits: Mapping[str, str] = field(default_factory=dict)

    def split(self, name: str) -> tuple[Post, ...]:
        return tuple(p for p in self.posts if self.splits.get(p.id) == name)

    def __len__(self) -> int:
        return len(self.posts)


def _fill_image_hashes(post: Post, base_dir: Path) -> Post:
    """Hash referenced image files that exist on disk; leave the rest alone."""
    changed = False
    refs = []
    for ref in post.images:
        if ref.hash is None and ref.path:
            candidate = Path(ref.path)
            if not candidate.is_absolute():
                candidate = base_dir / candidate
            if candidate.is_file():
                ref = replace(ref, hash=bytes_hash(candidate.read_bytes()))
                changed = True
        refs.append(ref)
    return replace(post, images=tuple(refs)) if changed else post


def load_dataset(posts_path: str | Path, split_path: str | Path | None = None,
                 *, fill_image_hashes: bool = True) -> Dataset:
    """Load and validate a JSONL post file, with optional split sidecar.

    Rejects duplicate ids and malformed lines with the offending line
    number. When a sidecar is given, its id set must equal the post file's.
    """
    posts_path = Path(posts_path)
    posts: list[Post] = []
    seen: set[str] = set()
    for lineno, line in enumerate(
            posts_path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{posts_path}:{lineno}: invalid JSON: {exc}") from None
        try:
            post = validate_post(raw)
        except ValidationError as exc:
            raise ParseError(f"{posts_path}:{lineno}: {exc}") from None
        if post.id in seen:
            raise ParseError(f"{posts_path}:{lineno}: duplicate post id {post.id!r}")
        seen.add(post.id)
        if fill_image_hashes:
            post = _fill_image_hashes(post, posts_path.parent)
        posts.append(post)

    splits: dict[str, str] = {}
    if split_path is not None:
        split_path = Path(split_path)
        for lineno, line in enumerate(
                split_path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(
                    f"{split_path}:{lineno}: invalid JSON: {exc}") from None
            if not isinstance(raw, dict) or "id" not in raw or "split" not in raw:
                raise ParseError(
                    f"{split_path}:{lineno}: expected an object with id and split")
            if raw["id"] in splits:
                raise ParseError(
                    f"{split_path}:{lineno}: duplicate id {raw['id']!r}")
            splits[raw["id"]] = str(raw["split"])
        if set(splits) != seen:
            missing = sorted(seen - set(splits))[:3]
            extra = sorted(set(splits) - seen)[:3]
            raise SplitMismatch(
                f"split sidecar does not cover the post file exactly "
                f"(unassigned: {missing}, unknown: {extra})")
    return Dataset(posts=tuple(posts), splits=splits)


# ---------------------------------------------------------------------------
# Predictions and metrics

@dataclass(frozen=True)
class PredictionRecord:
    """Outcome of running the detector on one post.

    Exactly one of ``predicted`` and ``error`` is set. ``truth_types``
    carries the ground-truth failure types so breakdowns don't need the
    dataset again.
    """

    post_id: str
    truth: Label
    truth_types: tuple[MisinfoType, ...] = ()
    predicted: Label | None = None
    confidence: int | None = None
    error: str | None = None

    def __post_init__(self) -> None:
        if (self.predicted is None) == (self.error is None):
            raise ValidationError(
                "record needs exactly one of a prediction or an error")
        if self.predicted is not None and self.confidence is None:
            raise ValidationError("a prediction carries a confidence")

    @property
    def correct(self) -> bool:
        return self.predicted is not None and self.predicted == self.truth


@dataclass(frozen=True)
class TypeMetrics:
    n: int
    accuracy: float | None


@dataclass(frozen=True)
class MetricsReport:
    n_posts: int
    n_real: int
    n_fake: int
    n_errors: int
    accuracy: float | None
    real_accuracy: float | None
    fake_accuracy: float | None
    avg_confidence: float | None
    by_type: Mapping[str, TypeMetrics]
    error_policy: str
    fingerprint: str = ""


def _pct(numerator: int, denominator: int) -> float | None:
    if denominator == 0:
        return None
    return round(100.0 * numerator / denominator, 1)


def compute_metrics(records: Iterable[PredictionRecord], *,
                    error_policy: str = "count_as_wrong",
                    fingerprint: str = "") -> MetricsReport:
    """Accuracy overall, per truth class, and per failure type.

    ``count_as_wrong`` keeps errored posts in every denominator;
    ``exclude`` drops them. Confidence is averaged over scored posts only,
    since an errored post states none.
    """
    if error_policy not in ERROR_POLICIES:
        raise ValueError(f"unknown error policy {error_policy!r}")
    records = list(records)
    scored = [r for r in records if r.error is None]
    pool = scored if error_policy == "exclude" else records

    def class_of(label: Label) -> list[PredictionRecord]:
        return [r for r in pool if r.truth is label]

    real, fake = class_of(Label.Real), class_of(Label.Fake)
    by_type = {}
    for mtype in MisinfoType:
        tagged = [r for r in fake if mtype in r.truth_types]
        by_type[mtype.value] = TypeMetrics(
            n=len(tagged), accuracy=_pct(sum(r.correct for r in tagged),
                                         len(tagged)))
    confidences = [r.confidence for r in scored]
    return MetricsReport(
        n_posts=len(records),
        n_real=sum(r.truth is Label.Real for r in records),
        n_fake=sum(r.truth is Label.Fake for r in records),
        n_errors=len(records) - len(scored),
        accuracy=_pct(sum(r.correct for r in pool), len(pool)),
        real_accuracy=_pct(sum(r.correct for r in real), len(real)),
        fake_accuracy=_pct(sum(r.correct for r in fake), len(fake)),
        avg_confidence=(round(statistics.fmean(confidences), 1)
                        if confidences else None),
        by_type=by_type,
        error_policy=error_policy,
        fingerprint=fingerprint,
    )


# ---------------------------------------------------------------------------
# Running the pipeline over a dataset

@dataclass(frozen=True)
class RunOutcome:
    records: tuple[PredictionRecord, ...]
    report: MetricsReport
    usage: TokenUsage
    warnings: tuple[str, ...]


def _sorted_types(post: Post) -> tuple[MisinfoType, ...]:
    return tuple(sorted(post.misinfo_types, key=lambda t: t.value))


def _judge_one(post: Post, *, llm, search, plan, method, reasoner_config,
               policy, extract) -> tuple[PredictionRecord, TokenUsage, list[str]]:
    usage = TokenUsage()
    warnings: list[str] = []
    try:
        if plan is None or search is None:
            bundle = EvidenceBundle(post_id=post.id)
        else:
            bundle = retrieve(post, plan, search=search, llm=llm)
            warnings.extend(bundle.warnings)
        if policy is not None:
            bundle = domain_filter(bundle, policy)
        if extract:
            bundle, extract_usage = extract_evidence(bundle, post.text, llm,
                                                     reasoner_config.model_id)
            usage = usage + extract_usage
        verdict = reason(post, bundle, method, llm, reasoner_config)
        usage = usage + verdict.token_usage
        warnings.extend(verdict.warnings)
        record = PredictionRecord(
            post_id=post.id, truth=post.label, truth_types=_sorted_types(post),
            predicted=verdict.label, confidence=verdict.confidence)
    except (AllStrategiesFailed, MethodFailed, BackendError) as exc:
        record = PredictionRecord(
            post_id=post.id, truth=post.label, truth_types=_sorted_types(post),
            error=f"{type(exc).__name__}: {exc}")
    return record, usage, warnings


def evaluate(posts: Iterable[Post], *, llm, search=None,
             plan: RetrievalPlan | None = None,
             method: ReasoningMethod = ReasoningMethod.CoT,
             reasoner_config: ReasonerConfig = ReasonerConfig(),
             policy: DomainPolicy | None = None, extract: bool = False,
             error_policy: str = "count_as_wrong", fingerprint: str = "",
             jobs: int = 1) -> RunOutcome:
    """Run retrieval + reasoning over posts and score the outcome.

    ``plan=None`` evaluates the no-evidence configuration: the reasoner sees
    an empty bundle and judges from the claim and images alone. Posts are
    processed independently; a post whose pipeline fails becomes an errored
    record handled per ``error_policy``. Ground-truth labels never reach the
    reasoning layer.
    """
    posts = list(posts)
    for post in posts:
        if post.label is None:
            raise ValidationError(f"post {post.id} has no ground-truth label")

    def one(post: Post):
        return _judge_one(post, llm=llm, search=search, plan=plan,
                          method=method, reasoner_config=reasoner_config,
                          policy=policy, extract=extract)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(one, posts))
    else:
        outcomes = [one(post) for post in posts]

    records = tuple(outcome[0] for outcome in outcomes)
    usage = TokenUsage()
    warnings: list[str] = []
    for _, one_usage, one_warnings in outcomes:
        usage = usage + one_usage
        warnings.extend(one_warnings)
    report = compute_metrics(records, error_policy=error_policy,
                             fingerprint=fingerprint)
    return RunOutcome(records=records, report=report, usage=usage,
                      warnings=tuple(warnings))


# ---------------------------------------------------------------------------
# Output

def _fmt(value: float | None, width: int = 8) -> str:
    return f"{value:>{width}.1f}" if value is not None else " " * (width - 1) + "-"


def format_report(report: MetricsReport) -> str:
    """Fixed-width summary table; identical inputs give identical bytes."""
    lines = [
        f"posts: {report.n_posts} (real {report.n_real}, fake {report.n_fake})"
        f"   errors: {report.n_errors} ({report.error_policy})",
    ]
    if report.fingerprint:
        lines.append(f"config: {report.fingerprint}")
    lines.append("")
    lines.append(f"{'':<16}{'n':>6}{'Acc':>8}{'R.Acc':>8}{'F.Acc':>8}"
                 f"{'Avg.Conf':>10}")
    lines.append(f"{'overall':<16}{report.n_posts:>6}{_fmt(report.accuracy)}"
                 f"{_fmt(report.real_accuracy)}{_fmt(report.fake_accuracy)}"
                 f"{_fmt(report.avg_confidence, 10)}")
    for name in sorted(report.by_type):
        tm = report.by_type[name]
        lines.append(f"{name:<16}{tm.n:>6}{_fmt(tm.accuracy)}"
                     f"{'':>8}{'':>8}{'':>10}".rstrip())
    return "\n".join(lines) + "\n"


def record_to_dict(record: PredictionRecord) -> dict:
    out: dict = {
        "post_id": record.post_id,
        "truth": record.truth.value,
        "truth_types": [t.value for t in record.truth_types],
    }
    if record.error is None:
        out["predicted"] = record.predicted.value
        out["confidence"] = record.confidence
    else:
        out["error"] = record.error
    return out


def records_to_jsonl(records: Iterable[PredictionRecord]) -> str:
    return "".join(canonical_json(record_to_dict(r)) + "\n" for r in records)


def report_to_dict(report: MetricsReport) -> dict:
    return {
        "n_posts": report.n_posts,
        "n_real": report.n_real,
        "n_fake": report.n_fake,
        "n_errors": report.n_errors,
        "accuracy": report.accuracy,
        "real_accuracy": report.real_accuracy,
        "fake_accuracy": report.fake_accuracy,
        "avg_confidence": report.avg_confidence,
        "by_type": {name: {"n": tm.n, "accuracy": tm.accuracy}
                    for name, tm in sorted(report.by_type.items())},
        "error_policy": report.error_policy,
        "fingerprint": report.fingerprint,
    }
