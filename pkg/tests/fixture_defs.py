"""Shared fixture constants and builders used by the generator and the tests.

The committed replay cache under tests/fixtures/cache was produced by a
deterministic keyword stub: completions depend only on the prompt text, so
regenerating the cache gives the same values. Everything that both the
generator and the test suite must agree on (stub rules, expected corpus
outcomes, fixture paths) lives here and nowhere else.
"""
from __future__ import annotations

import json
from pathlib import Path

from claimcheck.backends import (BackendConfig, EngineConfig, KeywordLlm,
                                 LlmEndpointConfig, ResponseCache)
from claimcheck.backends import HttpLlm, SearchClient
from claimcheck.backends.cache import BackendMode
from claimcheck.backends.transport import CountingTransport
from claimcheck.models import (Label, ReasoningMethod, TokenUsage, Verdict)

FIXTURES_DIR = Path(__file__).resolve().parent / "fixtures"

POSTS_20 = FIXTURES_DIR / "posts_20.jsonl"
SPLITS_20 = FIXTURES_DIR / "splits_20.jsonl"
CACHE_DIR = FIXTURES_DIR / "cache"
CURATION_FAKES = FIXTURES_DIR / "curation_fakes.jsonl"
CURATION_CANDIDATES = FIXTURES_DIR / "curation_candidates.jsonl"
CURATION_EMBEDDINGS = FIXTURES_DIR / "curation_embeddings.jsonl"
CASE_STUDY_POSTS = FIXTURES_DIR / "case_study_posts.jsonl"
CASE_STUDY_SCRIPT = FIXTURES_DIR / "case_study_script.json"

# The marker phrase that reverse-image evidence uses to signal an
# out-of-context image, and the stub completions keyed on it.
OOC_MARKER = "originates from a different event"

FAKE_GROUP_ANSWER = json.dumps({
    "label": "fake", "confidence": 85,
    "rationale": "The matched coverage traces the image to an earlier, "
                 "unrelated report, so the post misuses it.",
})
REAL_GROUP_ANSWER = json.dumps({
    "label": "real", "confidence": 70,
    "rationale": "This evidence source is consistent with the claim.",
})
FAKE_FINAL_ANSWER = json.dumps({
    "label": "fake", "confidence": 88,
    "rationale": "At least one evidence source establishes the image is "
                 "reused from another event, which outweighs the rest.",
})
REAL_FINAL_ANSWER = json.dumps({
    "label": "real", "confidence": 72,
    "rationale": "No evidence source contradicts the claim.",
})

# First matching rule wins. Group prompts carry the evidence text (where the
# marker can appear); aggregation prompts carry rendered intermediates
# ("label=fake ...") and the fixed "Intermediate judgments" heading.
STUB_RULES: tuple[tuple[str, str], ...] = (
    (OOC_MARKER, FAKE_GROUP_ANSWER),
    ("label=fake", FAKE_FINAL_ANSWER),
    ("Intermediate judgments", REAL_FINAL_ANSWER),
)
STUB_DEFAULT = REAL_GROUP_ANSWER


def make_stub_llm() -> KeywordLlm:
    return KeywordLlm(rules=list(STUB_RULES), default=STUB_DEFAULT,
                      model_id="stub")


# Outcomes the 20-post corpus is built to produce under the replay config
# (strategies 1+3, domain filter on, multi-step, stub model). post-010 is
# the designed miss (fake judged real); post-020 the designed false alarm.
EXPECTED_PREDICTIONS = {
    **{f"post-{i:03d}": "fake" for i in range(1, 10)},
    "post-010": "real",
    **{f"post-{i:03d}": "real" for i in range(11, 20)},
    "post-020": "fake",
}
EXPECTED_ACCURACY = 90.0
EXPECTED_REAL_ACCURACY = 90.0
EXPECTED_FAKE_ACCURACY = 90.0
EXPECTED_AVG_CONFIDENCE = 80.0

CASE_STUDY_FAKE = 265
CASE_STUDY_REAL = 235


def replay_backend_config(cache_root: Path | None = None) -> BackendConfig:
    """Backend config equivalent to what the CLI builds for replay runs.

    Engine ids must match the recording ("engine-a"/"engine-b" defaults);
    endpoints stay empty because replay never dials out.
    """
    return BackendConfig(
        mode=BackendMode.REPLAY,
        cache_root=str(cache_root or CACHE_DIR),
        engine_a=EngineConfig(id="engine-a"),
        engine_b=EngineConfig(id="engine-b"),
        llm=LlmEndpointConfig(model_id="stub"),
    )


def replay_clients(cache_root: Path | None = None,
                   ) -> tuple[SearchClient, HttpLlm, CountingTransport]:
    """Replay-mode clients wired through a counting transport.

    The transport has no inner transport, so any attempted network call
    both raises and increments the counter the tests assert on.
    """
    config = replay_backend_config(cache_root)
    cache = ResponseCache(config.cache_root)
    transport = CountingTransport(inner=None)
    search = SearchClient(config, cache, transport=transport)
    llm = HttpLlm(config, cache, transport=transport)
    return search, llm, transport


def load_case_study_script() -> dict[str, tuple]:
    """Committed assessment table -> scripted_detector input."""
    from claimcheck.loop import DigestEntry

    table = json.loads(CASE_STUDY_SCRIPT.read_text(encoding="utf-8"))
    script = {}
    for post_id, entry in table.items():
        verdict = Verdict(
            label=Label.parse(entry["label"]),
            confidence=int(entry["confidence"]),
            rationale="scripted case-study assessment",
            reasoning_method=ReasoningMethod.CoT,
            model_id="script",
            token_usage=TokenUsage(),
        )
        digest = (DigestEntry(strategy_id=1, count=1,
                              sources=("records.example: archived report",)),)
        script[post_id] = (verdict, digest)
    return script
