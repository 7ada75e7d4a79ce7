from __future__ import annotations

import datetime as dt

import pytest

from claimcheck.models import EvidenceKind
from claimcheck.prompting import (DEFAULT_ENSEMBLE_TEMPLATES,
                                  MEMBER_PLACEHOLDERS, PromptTemplate,
                                  describe_evidence, describe_images,
                                  load_raw, load_template, output_instructions,
                                  render_placeholders)

from helpers import make_item, make_post


@pytest.mark.parametrize("name", DEFAULT_ENSEMBLE_TEMPLATES)
def test_member_templates_load_with_all_placeholders(name):
    template = load_template(name)
    for placeholder in MEMBER_PLACEHOLDERS:
        assert template.user_template.count(placeholder) == 1
    assert template.output_instructions


def test_render_fills_every_placeholder():
    template = load_template("cot_v1")
    system, user = template.render(claim="THE CLAIM", evidence="THE EVIDENCE",
                                   images="image 1: abc")
    assert "THE CLAIM" in user
    assert "THE EVIDENCE" in user
    assert "image 1: abc" in user
    for placeholder in MEMBER_PLACEHOLDERS:
        assert placeholder not in user
    assert user.endswith(output_instructions())
    assert isinstance(system, str)


def test_template_rejects_missing_placeholder():
    with pytest.raises(ValueError):
        PromptTemplate(name="bad", system_text="", user_template="{claim} only",
                       output_instructions="x")


def test_output_instructions_demand_one_json_object():
    text = output_instructions()
    assert "JSON" in text
    for key in ("label", "confidence", "rationale"):
        assert key in text


def test_load_raw_auxiliary_prompts():
    for name in ("aggregate_ensemble_v1", "aggregate_multistep_v1",
                 "multistep_group_v1", "query_gen_v1", "extract_v1",
                 "reask_v1"):
        system, user = load_raw(name)
        assert user, name


def test_multistep_prompts_carry_their_slots():
    _, group_user = load_raw("multistep_group_v1")
    for slot in ("{claim}", "{images}", "{source}", "{evidence}"):
        assert slot in group_user
    _, agg_user = load_raw("aggregate_multistep_v1")
    for slot in ("{claim}", "{images}", "{intermediates}"):
        assert slot in agg_user
    assert "Intermediate judgments" in agg_user


def test_render_placeholders_leaves_unknown_braces():
    out = render_placeholders("{a} and {later}", {"a": "X"})
    assert out == "X and {later}"


def test_describe_images_one_line_per_image():
    post = make_post(n_images=2)
    lines = describe_images(post).splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("image 1: ")
    assert lines[1].startswith("image 2: ")


def test_describe_evidence_empty():
    assert describe_evidence([]) == "(no evidence retrieved)"


def test_describe_evidence_line_shape():
    items = [
        make_item(sid=1, rank=1, url="https://news.example/a",
                  title="Headline", body="Snippet text"),
        make_item(sid=1, rank=2, url="https://bare.example/b"),
        make_item(sid=2, rank=1, url="https://img.example/c",
                  kind=EvidenceKind.Image, image_hash="beef01"),
    ]
    object.__setattr__(items[0], "published_date", dt.date(2024, 5, 1))
    text = describe_evidence(items)
    lines = text.splitlines()
    assert lines[0] == ("[1] source: news.example | title: Headline | "
                        "date: 2024-05-01 | text: Snippet text")
    assert lines[1] == "[2] source: bare.example"
    assert lines[2] == "[3] source: img.example | matched image: beef01"
