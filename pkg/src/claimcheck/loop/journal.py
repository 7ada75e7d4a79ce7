"""Append-only event journal backing the review loop.

Every state transition of the review store is an event here first; the
store's in-memory state is a pure fold over the sequence, so replaying the
file reconstructs it exactly. Events are JSONL with monotonically
increasing sequence numbers. A missing path keeps the journal in memory,
which the tests use heavily.
"""
from __future__ import annotations

import datetime as _dt
import json
import threading
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from pathlib import Path

from ..models import canonical_json

EVENT_KINDS = ("ingested", "assessed", "decided", "exported")


def utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str
    at: str
    payload: Mapping

    def to_record(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "at": self.at,
                "payload": dict(self.payload)}


def event_from_record(rec: Mapping) -> Event:
    return Event(seq=int(rec["seq"]), kind=str(rec["kind"]),
                 at=str(rec["at"]), payload=rec.get("payload") or {})


class CorruptJournal(Exception):
    pass


class Journal:
    """Single-writer append log; reads see only fully written events."""

    def __init__(self, path: str | Path | None = None,
                 clock: Callable[[], str] | None = None):
        self.path = Path(path) if path is not None else None
        self.clock = clock or utc_now
        self._lock = threading.Lock()
        self._memory: list[Event] = []
        self._last_seq = 0
        if self.path is not None and self.path.exists():
            events = read_events(self.path)
            if events:
                self._last_seq = events[-1].seq

    @property
    def last_seq(self) -> int:
        return self._last_seq

    def append(self, kind: str, payload: Mapping) -> Event:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        with self._lock:
            event = Event(seq=self._last_seq + 1, kind=kind, at=self.clock(),
                          payload=dict(payload))
            if self.path is None:
                self._memory.append(event)
            else:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(canonical_json(event.to_record()) + "\n")
                    fh.flush()
            self._last_seq = event.seq
            return event

    def events(self) -> list[Event]:
        if self.path is None:
            with self._lock:
                return list(self._memory)
        if not self.path.exists():
            return []
        return read_events(self.path)


def read_events(path: str | Path) -> list[Event]:
    events: list[Event] = []
    last = 0
    for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptJournal(f"{path}:{lineno}: invalid JSON: {exc}") from None
        event = event_from_record(rec)
        if event.seq != last + 1:
            raise CorruptJournal(f"{path}:{lineno}: sequence jump "
                                 f"{last} -> {event.seq}")
        last = event.seq
        events.append(event)
    return events
