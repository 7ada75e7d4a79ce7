"""Review store: items, detector assessments, decisions, dataset export.

State lives in memory and is rebuilt by folding the journal; every mutation
appends its event before applying it. Item ids are derived from ingest
order, so a replayed journal assigns identical ids. Decisions are
immutable: a wrong decision is corrected by re-ingesting the post.
"""
from __future__ import annotations

import json
import logging
import threading
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from ..models import (EvidenceBundle, Label, MisinfoType, Post,
                      ValidationError, Verdict, canonical_json, post_to_record,
                      text_hash, validate_post, verdict_from_record,
                      verdict_to_record)
from .journal import Event, Journal

log = logging.getLogger(__name__)

DIGEST_SOURCES_PER_STRATEGY = 3


class LoopError(Exception):
    pass


class UnknownItem(LoopError):
    pass


class AlreadyDecided(LoopError):
    pass


class InvalidDecision(LoopError):
    pass


class ReviewStatus(Enum):
    Pending = "pending"
    Accepted = "accepted"
    Rejected = "rejected"


@dataclass(frozen=True)
class DigestEntry:
    """Compact per-strategy evidence summary shown to reviewers."""

    strategy_id: int
    count: int
    sources: tuple[str, ...] = ()

    def to_record(self) -> dict:
        return {"strategy_id": self.strategy_id, "count": self.count,
                "sources": list(self.sources)}


def digest_entry_from_record(rec: Mapping) -> DigestEntry:
    return DigestEntry(strategy_id=int(rec["strategy_id"]),
                       count=int(rec["count"]),
                       sources=tuple(rec.get("sources") or ()))


def digest_bundle(bundle: EvidenceBundle) -> tuple[DigestEntry, ...]:
    entries = []
    for sid in sorted(bundle.groups):
        items = bundle.groups[sid]
        sources = []
        for item in items[:DIGEST_SOURCES_PER_STRATEGY]:
            label = item.domain or item.source_url
            if item.title:
                label = f"{label}: {item.title}"
            sources.append(label)
        entries.append(DigestEntry(strategy_id=sid, count=len(items),
                                   sources=tuple(sources)))
    return tuple(entries)


@dataclass(frozen=True)
class Decision:
    """A reviewer's final word on one item.

    Accepting requires a final label (the reviewer's, which may override
    the detector), and a fake final label requires at least one failure
    type. Rejection discards the item and carries a note at most.
    """

    accept: bool
    reviewer_id: str
    decided_at: str
    final_label: Label | None = None
    types: frozenset[MisinfoType] = frozenset()
    note: str = ""

    def __post_init__(self) -> None:
        if not self.reviewer_id:
            raise InvalidDecision("decision needs a reviewer id")
        if self.accept:
            if self.final_label is None:
                raise InvalidDecision("accepting requires a final label")
            if self.final_label is Label.Fake and not self.types:
                raise InvalidDecision("accepted fake items need at least "
                                      "one failure type")
            if self.final_label is Label.Real and self.types:
                raise InvalidDecision("real items cannot carry failure types")
        elif self.final_label is not None or self.types:
            raise InvalidDecision("a rejection carries no label or types")

    def to_record(self) -> dict:
        rec: dict = {"accept": self.accept, "reviewer_id": self.reviewer_id,
                     "decided_at": self.decided_at}
        if self.final_label is not None:
            rec["final_label"] = self.final_label.value
        if self.types:
            rec["types"] = sorted(t.value for t in self.types)
        if self.note:
            rec["note"] = self.note
        return rec


def decision_from_record(rec: Mapping) -> Decision:
    label = rec.get("final_label")
    return Decision(
        accept=bool(rec["accept"]),
        reviewer_id=str(rec["reviewer_id"]),
        decided_at=str(rec["decided_at"]),
        final_label=Label.parse(label) if label else None,
        types=frozenset(MisinfoType.parse(t) for t in rec.get("types") or ()),
        note=str(rec.get("note", "")),
    )


@dataclass(frozen=True)
class ReviewItem:
    id: str
    post: Post
    ingested_at: str
    verdict: Verdict | None = None
    digest: tuple[DigestEntry, ...] = ()
    status: ReviewStatus = ReviewStatus.Pending
    decision: Decision | None = None
    error_note: str = ""
    attempted: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if (self.status is ReviewStatus.Pending) != (self.decision is None):
            raise ValidationError("pending iff undecided")
        if self.verdict is None and self.status is not ReviewStatus.Pending:
            raise ValidationError("cannot decide an unassessed item")

    @property
    def assessed(self) -> bool:
        return self.verdict is not None


def dedup_key(post: Post) -> str:
    parts = [text_hash(post.text)]
    for ref in post.images:
        parts.append(ref.hash or ref.url or ref.path or "")
    return "|".join(parts)


# Detector callback: post -> (verdict, digest entries).
Detector = Callable[[Post], tuple[Verdict, tuple[DigestEntry, ...]]]


class LoopStore:
    """Journaled review state with a single-writer lock."""

    def __init__(self, journal: Journal | None = None,
                 snapshot_path: str | Path | None = None,
                 snapshot_every: int = 100):
        self.journal = journal or Journal()
        self.snapshot_path = Path(snapshot_path) if snapshot_path else None
        self.snapshot_every = snapshot_every
        self._lock = threading.RLock()
        self._items: dict[str, ReviewItem] = {}
        self._order: list[str] = []
        self._dedup: dict[str, str] = {}
        self._applied_seq = 0
        self._export_count = 0

    # -- construction ------------------------------------------------------

    @classmethod
    def open(cls, journal_path: str | Path | None,
             snapshot_path: str | Path | None = None,
             clock: Callable[[], str] | None = None,
             snapshot_every: int = 100) -> "LoopStore":
        """Load snapshot (if any), then fold the journal tail."""
        store = cls(Journal(journal_path, clock=clock),
                    snapshot_path=snapshot_path, snapshot_every=snapshot_every)
        if store.snapshot_path and store.snapshot_path.exists():
            store._load_snapshot(store.snapshot_path)
        for event in store.journal.events():
            if event.seq > store._applied_seq:
                store._apply(event)
        return store

    # -- pure fold ---------------------------------------------------------

    def _apply(self, event: Event) -> None:
        payload = event.payload
        if event.kind == "ingested":
            post = validate_post(payload["post"])
            item = ReviewItem(id=payload["item_id"], post=post,
                              ingested_at=event.at)
            self._items[item.id] = item
            self._order.append(item.id)
            self._dedup[payload["key"]] = item.id
        elif event.kind == "assessed":
            item = self._items[payload["item_id"]]
            attempted = item.attempted | {payload["fingerprint"]}
            if "error" in payload:
                item = replace(item, error_note=payload["error"],
                               attempted=attempted)
            else:
                item = replace(
                    item,
                    verdict=verdict_from_record(payload["verdict"]),
                    digest=tuple(digest_entry_from_record(d)
                                 for d in payload.get("digest") or ()),
                    error_note="", attempted=attempted)
            self._items[item.id] = item
        elif event.kind == "decided":
            item = self._items[payload["item_id"]]
            decision = decision_from_record(payload["decision"])
            status = (ReviewStatus.Accepted if decision.accept
                      else ReviewStatus.Rejected)
            self._items[item.id] = replace(item, status=status,
                                           decision=decision)
        elif event.kind == "exported":
            self._export_count += 1
        else:  # pragma: no cover - journal validates kinds on append
            raise ValueError(f"unknown event kind {event.kind!r}")
        self._applied_seq = event.seq

    def _append(self, kind: str, payload: Mapping) -> Event:
        event = self.journal.append(kind, payload)
        self._apply(event)
        if (self.snapshot_path and self.snapshot_every > 0
                and event.seq % self.snapshot_every == 0):
            self.save_snapshot(self.snapshot_path)
        return event

    # -- operations --------------------------------------------------------

    def ingest(self, raw: Mapping) -> tuple[str, bool]:
        """Returns (item id, duplicate flag). Labeled posts are refused."""
        post = validate_post(raw)
        if post.label is not None or post.misinfo_types:
            raise ValidationError("review items must arrive unlabeled")
        key = dedup_key(post)
        with self._lock:
            if key in self._dedup:
                return self._dedup[key], True
            item_id = f"item-{len(self._order) + 1:06d}"
            self._append("ingested", {"item_id": item_id,
                                      "post": post_to_record(post),
                                      "key": key})
            return item_id, False

    def run_detection(self, item_ids: Iterable[str] | None,
                      detector: Detector, fingerprint: str) -> int:
        """Assess unassessed items; returns how many gained a verdict.

        Failures are journaled per item as error notes and do not abort the
        batch; an item is never re-attempted under a fingerprint it has
        already seen.
        """
        with self._lock:
            if item_ids is None:
                targets = list(self._order)
            else:
                targets = list(item_ids)
                for item_id in targets:
                    if item_id not in self._items:
                        raise UnknownItem(item_id)
            assessed = 0
            for item_id in targets:
                item = self._items[item_id]
                if item.assessed or fingerprint in item.attempted:
                    continue
                try:
                    verdict, digest = detector(item.post)
                    self._append("assessed", {
                        "item_id": item_id, "fingerprint": fingerprint,
                        "verdict": verdict_to_record(verdict),
                        "digest": [d.to_record() for d in digest]})
                    assessed += 1
                except Exception as exc:
                    log.warning("detection failed for %s: %s", item_id, exc)
                    self._append("assessed", {
                        "item_id": item_id, "fingerprint": fingerprint,
                        "error": f"{type(exc).__name__}: {exc}"})
            return assessed

    def queue(self, label: Label | None = None, offset: int = 0,
              limit: int = 50) -> tuple[list[ReviewItem], int]:
        """Pending-assessed items in triage order, plus the filtered total.

        Confident fake predictions come first; pagination is stable because
        the sort key ends with the item id.
        """
        with self._lock:
            pending = [item for item in self._items.values()
                       if item.status is ReviewStatus.Pending and item.assessed]
        if label is not None:
            pending = [item for item in pending if item.verdict.label is label]
        pending.sort(key=lambda item: (
            0 if item.verdict.label is Label.Fake else 1,
            -item.verdict.confidence, item.id))
        return pending[offset:offset + limit], len(pending)

    def get(self, item_id: str) -> ReviewItem:
        with self._lock:
            if item_id not in self._items:
                raise UnknownItem(item_id)
            return self._items[item_id]

    def decide(self, item_id: str, *, accept: bool, reviewer_id: str,
               final_label: Label | None = None,
               types: Iterable[MisinfoType] = (), note: str = "") -> ReviewItem:
        with self._lock:
            item = self.get(item_id)
            if item.status is not ReviewStatus.Pending:
                raise AlreadyDecided(f"{item_id} already "
                                     f"{item.status.value}")
            if not item.assessed:
                raise InvalidDecision(f"{item_id} has not been assessed yet")
            decision = Decision(accept=accept, reviewer_id=reviewer_id,
                                decided_at=self.journal.clock(),
                                final_label=final_label,
                                types=frozenset(types), note=note)
            self._append("decided", {"item_id": item_id,
                                     "decision": decision.to_record()})
            return self._items[item_id]

    def accepted_records(self) -> list[dict]:
        """Accepted items as dataset records, ordered by decision time."""
        with self._lock:
            accepted = [item for item in self._items.values()
                        if item.status is ReviewStatus.Accepted]
        accepted.sort(key=lambda item: (item.decision.decided_at, item.id))
        records = []
        for item in accepted:
            post = replace(item.post, label=item.decision.final_label,
                           misinfo_types=item.decision.types)
            records.append(post_to_record(post))
        return records

    def export_dataset(self) -> str:
        """Accepted items as a loadable JSONL dataset; journals the export."""
        records = self.accepted_records()
        with self._lock:
            self._append("exported", {"count": len(records),
                                      "ids": [r["id"] for r in records]})
        return "".join(canonical_json(rec) + "\n" for rec in records)

    @property
    def export_count(self) -> int:
        return self._export_count

    def items(self) -> list[ReviewItem]:
        with self._lock:
            return [self._items[i] for i in self._order]

    # -- snapshots ---------------------------------------------------------

    def save_snapshot(self, path: str | Path | None = None) -> Path:
        target = Path(path) if path else self.snapshot_path
        if target is None:
            raise ValueError("no snapshot path configured")
        with self._lock:
            state = {
                "seq": self._applied_seq,
                "export_count": self._export_count,
                "order": list(self._order),
                "dedup": dict(self._dedup),
                "items": [self._item_record(self._items[i])
                          for i in self._order],
            }
        target.parent.mkdir(parents=True, exist_ok=True)
        tmp = target.with_suffix(target.suffix + ".tmp")
        tmp.write_text(canonical_json(state) + "\n", encoding="utf-8")
        tmp.replace(target)
        return target

    @staticmethod
    def _item_record(item: ReviewItem) -> dict:
        rec: dict = {
            "id": item.id,
            "post": post_to_record(item.post),
            "ingested_at": item.ingested_at,
            "status": item.status.value,
            "error_note": item.error_note,
            "attempted": sorted(item.attempted),
            "digest": [d.to_record() for d in item.digest],
        }
        if item.verdict is not None:
            rec["verdict"] = verdict_to_record(item.verdict)
        if item.decision is not None:
            rec["decision"] = item.decision.to_record()
        return rec

    def _load_snapshot(self, path: Path) -> None:
        state = json.loads(path.read_text(encoding="utf-8"))
        self._applied_seq = int(state["seq"])
        self._export_count = int(state.get("export_count", 0))
        self._order = list(state["order"])
        self._dedup = dict(state["dedup"])
        self._items = {}
        for rec in state["items"]:
            verdict = (verdict_from_record(rec["verdict"])
                       if "verdict" in rec else None)
            decision = (decision_from_record(rec["decision"])
                        if "decision" in rec else None)
            item = ReviewItem(
                id=rec["id"], post=validate_post(rec["post"]),
                ingested_at=rec["ingested_at"], verdict=verdict,
                digest=tuple(digest_entry_from_record(d)
                             for d in rec.get("digest") or ()),
                status=ReviewStatus(rec["status"]), decision=decision,
                error_note=rec.get("error_note", ""),
                attempted=frozenset(rec.get("attempted") or ()))
            self._items[item.id] = item
