"""HTTP front end for the review loop.

Thin JSON layer over LoopStore: every handler translates one store
operation and its errors to status codes. Authentication is a single
static bearer token from config; /health stays open for probes.
"""
from __future__ import annotations

import logging
from collections.abc import Mapping

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from ..models import Label, MisinfoType, ValidationError
from .store import (AlreadyDecided, Detector, InvalidDecision, LoopStore,
                    ReviewItem, UnknownItem)

log = logging.getLogger(__name__)


class DecisionBody(BaseModel):
    accept: bool
    reviewer_id: str
    final_label: str | None = None
    types: list[str] = Field(default_factory=list)
    note: str = ""


class RunBody(BaseModel):
    item_ids: list[str] | None = None
    fingerprint: str | None = None


def item_view(item: ReviewItem) -> dict:
    view: dict = {
        "id": item.id,
        "status": item.status.value,
        "ingested_at": item.ingested_at,
        "post": {
            "id": item.post.id,
            "text": item.post.text,
            "images": [
                {k: v for k, v in (("hash", ref.hash), ("url", ref.url),
                                   ("path", ref.path)) if v}
                for ref in item.post.images
            ],
            "source_url": item.post.source_url,
            "topic": item.post.topic.value if item.post.topic else None,
        },
        "verdict": None,
        "digest": [d.to_record() for d in item.digest],
        "decision": None,
        "error_note": item.error_note,
    }
    if item.verdict is not None:
        view["verdict"] = {
            "label": item.verdict.label.value,
            "confidence": item.verdict.confidence,
            "rationale": item.verdict.rationale,
            "reasoning_method": item.verdict.reasoning_method.value,
        }
    if item.decision is not None:
        view["decision"] = item.decision.to_record()
    return view


def create_app(store: LoopStore, detector: Detector, *, token: str = "",
               fingerprint: str = "default") -> FastAPI:
    app = FastAPI(title="claimcheck review loop", version="0.1.0")
    # The review UI is served as static files from wherever, so the API
    # answers cross-origin requests. Auth still rides the bearer header.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["Authorization", "Content-Type"],
    )

    def require_auth(request: Request) -> None:
        if not token:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or bad token")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "items": len(store.items()),
                "journal_seq": store.journal.last_seq}

    @app.post("/posts", dependencies=[Depends(require_auth)])
    def ingest_post(body: dict) -> dict:
        try:
            item_id, duplicate = store.ingest(body)
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return {"id": item_id, "duplicate": duplicate}

    @app.post("/runs", dependencies=[Depends(require_auth)])
    def run_detection(body: RunBody) -> dict:
        try:
            assessed = store.run_detection(
                body.item_ids, detector, body.fingerprint or fingerprint)
        except UnknownItem as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        return {"assessed": assessed}

    @app.get("/review/queue", dependencies=[Depends(require_auth)])
    def review_queue(label: str | None = None,
                     offset: int = Query(0, ge=0),
                     limit: int = Query(50, ge=1, le=500)) -> dict:
        parsed = None
        if label is not None:
            try:
                parsed = Label.parse(label)
            except ValidationError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from None
        items, total = store.queue(label=parsed, offset=offset, limit=limit)
        return {"items": [item_view(i) for i in items], "total": total,
                "offset": offset}

    @app.get("/review/{item_id}", dependencies=[Depends(require_auth)])
    def review_item(item_id: str) -> dict:
        try:
            return item_view(store.get(item_id))
        except UnknownItem as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None

    @app.post("/review/{item_id}/decision", dependencies=[Depends(require_auth)])
    def submit_decision(item_id: str, body: DecisionBody) -> dict:
        try:
            final_label = Label.parse(body.final_label) \
                if body.final_label else None
            types = [MisinfoType.parse(t) for t in body.types]
            item = store.decide(item_id, accept=body.accept,
                                reviewer_id=body.reviewer_id,
                                final_label=final_label, types=types,
                                note=body.note)
        except UnknownItem as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from None
        except AlreadyDecided as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from None
        except (InvalidDecision, ValidationError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from None
        return item_view(item)

    @app.get("/export", dependencies=[Depends(require_auth)])
    def export_dataset() -> PlainTextResponse:
        return PlainTextResponse(store.export_dataset(),
                                 media_type="application/x-ndjson")

    return app


def scripted_detector(script: Mapping[str, tuple]) -> Detector:
    """Detector that answers from a post-id-keyed table; unknown ids fail.

    Each script value is (verdict, digest entries). Useful for fixtures and
    for exercising the service without backends.
    """
    def detect(post):
        if post.id not in script:
            raise KeyError(f"no scripted assessment for post {post.id!r}")
        return script[post.id]
    return detect
