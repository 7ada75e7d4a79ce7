"""Detection-in-the-loop review service: journal, store, HTTP app."""
from .journal import CorruptJournal, Event, Journal, read_events, utc_now
from .store import (AlreadyDecided, Decision, Detector, DigestEntry,
                    InvalidDecision, LoopError, LoopStore, ReviewItem,
                    ReviewStatus, UnknownItem, dedup_key, digest_bundle)
from .service import create_app, item_view, scripted_detector

__all__ = [
    "CorruptJournal", "Event", "Journal", "read_events", "utc_now",
    "AlreadyDecided", "Decision", "Detector", "DigestEntry",
    "InvalidDecision", "LoopError", "LoopStore", "ReviewItem",
    "ReviewStatus", "UnknownItem", "dedup_key", "digest_bundle",
    "create_app", "item_view", "scripted_detector",
]
