from __future__ import annotations

import datetime as dt
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from claimcheck.models import (BadDate, BadEnum, EmptyImages, EvidenceBundle,
                               EvidenceItem, EvidenceKind, ImageRef,
                               IntermediateJudgment, Label, MisinfoType,
                               MissingField, Post, ReasoningMethod, TokenUsage,
                               Topic, TypeOnRealPost, ValidationError, Verdict,
                               bundle_from_record, bundle_to_record,
                               bytes_hash, canonical_json,
                               evidence_item_from_record,
                               evidence_item_to_record, post_to_record,
                               text_hash, validate_post, verdict_from_record,
                               verdict_to_record)

from helpers import make_item, make_post

TODAY = dt.date(2030, 1, 1)


def test_label_parse_case_insensitive():
    assert Label.parse("Fake") is Label.Fake
    assert Label.parse(" REAL ") is Label.Real
    with pytest.raises(BadEnum):
        Label.parse("maybe")


def test_topic_and_type_parse():
    assert Topic.parse("Politics") is Topic.Politics
    assert MisinfoType.parse("IMAGE_OOC") is MisinfoType.ImageOOC
    with pytest.raises(BadEnum):
        Topic.parse("weather")


def test_image_ref_needs_some_identity():
    with pytest.raises(MissingField):
        ImageRef()
    assert ImageRef(url="https://a.example/i.png").url


def test_post_requires_images():
    with pytest.raises(EmptyImages):
        Post(id="p", text="t", images=())


def test_real_post_cannot_carry_types():
    with pytest.raises(TypeOnRealPost):
        make_post(label="real", types=("deepfake",))


def test_validate_post_missing_fields():
    for field in ("id", "text", "images"):
        raw = {"id": "p", "text": "t", "images": [{"hash": "ab"}]}
        del raw[field]
        with pytest.raises(MissingField):
            validate_post(raw, today=TODAY)


def test_validate_post_rejects_future_dates():
    raw = {"id": "p", "text": "t", "images": [{"hash": "ab"}],
           "date": "2031-06-01"}
    with pytest.raises(BadDate):
        validate_post(raw, today=TODAY)
    ok = validate_post(raw, today=dt.date(2031, 6, 1))
    assert ok.date == dt.date(2031, 6, 1)


def test_validate_post_full_record():
    raw = {
        "id": "p9", "text": "claim", "images": [{"hash": "aa"}, {"url": "u"}],
        "author_id": "u1", "source_url": "https://s.example/p9",
        "date": "2024-03-05", "topic": "science", "label": "fake",
        "misinfo_types": ["image_ooc", "deepfake"],
        "flagging": [{"url": "https://f.example", "text": "old image reused"}],
    }
    post = validate_post(raw, today=TODAY)
    assert post.topic is Topic.Science
    assert post.misinfo_types == {MisinfoType.ImageOOC, MisinfoType.Deepfake}
    assert post.flagging[0].text == "old image reused"


def test_canonical_json_compact_and_order_preserving():
    assert canonical_json({"b": 1, "a": [2, 1]}) == '{"b":1,"a":[2,1]}'
    assert canonical_json({"t": "café"}) == '{"t":"café"}'


def test_record_builders_fix_the_field_order():
    # Determinism rests on the builders, not on key sorting: the same post
    # serializes to the same bytes no matter how it was constructed.
    a = make_post(post_id="p2", label="fake", types=("deepfake", "image_ooc"))
    b = validate_post(post_to_record(a), today=TODAY)
    assert canonical_json(post_to_record(a)) == canonical_json(post_to_record(b))


def test_hashes_are_stable():
    assert text_hash("hello") == bytes_hash(b"hello")
    assert bytes_hash(b"") == ("e3b0c44298fc1c149afbf4c8996fb924"
                               "27ae41e4649b934ca495991b7852b855")


posts_strategy = st.builds(
    make_post,
    post_id=st.text(alphabet="abcdef0123456789-", min_size=1, max_size=12),
    text=st.text(min_size=1, max_size=80),
    label=st.sampled_from([None, "real", "fake"]),
    topic=st.sampled_from([None] + [t.value for t in Topic]),
    n_images=st.integers(min_value=1, max_value=3),
    date=st.one_of(st.none(), st.dates(min_value=dt.date(2015, 1, 1),
                                       max_value=dt.date(2029, 12, 31))),
)


@given(posts_strategy, st.sets(st.sampled_from([t.value for t in MisinfoType]),
                               max_size=3))
def test_post_record_round_trip(post, types):
    if post.label is Label.Fake:
        post = Post(id=post.id, text=post.text, images=post.images,
                    author_id=post.author_id, source_url=post.source_url,
                    date=post.date, topic=post.topic, label=post.label,
                    misinfo_types=frozenset(MisinfoType.parse(t)
                                            for t in types))
    rec = post_to_record(post)
    assert validate_post(json.loads(canonical_json(rec)), today=TODAY) == post


def test_evidence_item_validation():
    with pytest.raises(ValidationError):
        make_item(sid=9, rank=1)
    with pytest.raises(ValidationError):
        make_item(sid=1, rank=0)
    with pytest.raises(ValidationError):
        EvidenceItem(kind=EvidenceKind.Image, source_url="https://a.example")


def test_evidence_item_derives_domain():
    item = make_item(sid=1, rank=1, url="https://www.sub.news.example/x")
    assert item.domain == "news.example"


def test_evidence_item_round_trip():
    item = EvidenceItem(kind=EvidenceKind.Image, source_url="https://a.example/p",
                        title="t", body="b", strategy_id=4, rank=2,
                        image_ref=ImageRef(hash="cafe"),
                        published_date=dt.date(2023, 7, 1))
    assert evidence_item_from_record(
        json.loads(canonical_json(evidence_item_to_record(item)))) == item


def test_bundle_enforces_group_consistency():
    good = make_item(sid=3, rank=1)
    with pytest.raises(ValidationError):
        EvidenceBundle(post_id="p", groups={1: (good,)})
    with pytest.raises(ValidationError):
        EvidenceBundle(post_id="p", groups={3: (good, make_item(sid=3, rank=1))})
    with pytest.raises(ValidationError):
        EvidenceBundle(post_id="p",
                       groups={3: (make_item(sid=3, rank=2), good)})
    with pytest.raises(ValidationError):
        EvidenceBundle(post_id="p", groups={0: ()})


def test_bundle_all_items_ordered_by_strategy_then_rank():
    b = EvidenceBundle(post_id="p", groups={
        5: (make_item(sid=5, rank=1), make_item(sid=5, rank=2)),
        1: (make_item(sid=1, rank=1),),
    })
    assert [(i.strategy_id, i.rank) for i in b.all_items()] == \
        [(1, 1), (5, 1), (5, 2)]


def test_bundle_round_trip():
    b = EvidenceBundle(post_id="p", groups={
        1: (make_item(sid=1, rank=1, body="x"),),
        3: (make_item(sid=3, rank=1), make_item(sid=3, rank=2)),
    })
    assert bundle_from_record(json.loads(canonical_json(bundle_to_record(b)))) == b


def test_token_usage_addition_and_bounds():
    assert TokenUsage(1, 2) + TokenUsage(3, 4) == TokenUsage(4, 6)
    with pytest.raises(ValidationError):
        TokenUsage(-1, 0)


def test_verdict_confidence_bounds():
    with pytest.raises(ValidationError):
        Verdict(label=Label.Real, confidence=101, rationale="",
                reasoning_method=ReasoningMethod.CoT)


def test_verdict_intermediates_iff_multistep():
    with pytest.raises(ValidationError):
        Verdict(label=Label.Real, confidence=50, rationale="",
                reasoning_method=ReasoningMethod.CoT, intermediates=())
    with pytest.raises(ValidationError):
        Verdict(label=Label.Real, confidence=50, rationale="",
                reasoning_method=ReasoningMethod.MultiStep)


def test_verdict_round_trip_with_intermediates():
    verdict = Verdict(
        label=Label.Fake, confidence=88, rationale="image reused",
        reasoning_method=ReasoningMethod.MultiStep, model_id="m",
        token_usage=TokenUsage(10, 5),
        intermediates=(
            IntermediateJudgment(strategy_id=1, label=Label.Real,
                                 confidence=70, rationale="consistent"),
            IntermediateJudgment(strategy_id=3, label=None, confidence=None,
                                 rationale="backend down", available=False),
        ),
        retry_count=1, warnings=("a warning",))
    rec = json.loads(canonical_json(verdict_to_record(verdict)))
    assert verdict_from_record(rec) == verdict
