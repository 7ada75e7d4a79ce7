"""Reasoning orchestrators that turn a post plus evidence into a verdict.

Four methods, each with a fixed LLM call budget:

* cot: one call, plus at most one re-ask when the answer cannot be parsed.
* ensemble: n differently-framed member calls, then one aggregation call.
* self_consistency: k samples of the same prompt at high temperature,
  resolved by majority vote. Exactly k calls.
* multi_step: one judgment call per evidence group, then one aggregation
  call over the per-source judgments.

All model answers go through one verdict grammar (structured JSON first,
embedded JSON second, labeled lines last), so prompt templates can evolve
without touching the parser.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

from .backends.errors import BackendError
from .backends.llm import LlmMessage, LlmRequest, LlmResponse
from .models import (EvidenceBundle, IntermediateJudgment, Label, Post,
                     ReasoningMethod, TokenUsage, Verdict)
from .prompting import (DEFAULT_ENSEMBLE_TEMPLATES, DEFAULT_MEMBER_TEMPLATE,
                        PromptTemplate, describe_evidence, describe_images,
                        load_raw, load_template, output_instructions,
                        render_placeholders)
from .retrieval import STRATEGY_LABELS

log = logging.getLogger(__name__)

SELF_CONSISTENCY_TEMPERATURE = 0.7
DEFAULT_SAMPLE_COUNT = 5


class ReasoningError(Exception):
    pass


class Unparseable(ReasoningError):
    """No verdict could be recovered from a model answer."""


class MethodFailed(ReasoningError):
    """A reasoning method could not produce a verdict."""

    def __init__(self, method: ReasoningMethod, reason: str):
        super().__init__(f"{method.value} failed: {reason}")
        self.method = method
        self.reason = reason


@dataclass(frozen=True)
class ReasonerConfig:
    model_id: str = "stub"
    member_template: str = DEFAULT_MEMBER_TEMPLATE
    ensemble_templates: tuple[str, ...] = DEFAULT_ENSEMBLE_TEMPLATES
    samples: int = DEFAULT_SAMPLE_COUNT

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not self.ensemble_templates:
            raise ValueError("ensemble needs at least one member template")


# ---------------------------------------------------------------------------
# Verdict grammar

_LABEL_LINE = re.compile(r'"?label"?\s*[:=]\s*"?(real|fake)"?', re.IGNORECASE)
_CONF_LINE = re.compile(r'"?confidence"?\s*[:=]\s*([0-9]+(?:\.[0-9]+)?)',
                        re.IGNORECASE)
_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def _coerce_confidence(value, warnings: list[str]) -> int:
    if value is None:
        warnings.append("confidence missing, defaulted to 50")
        return 50
    try:
        conf = int(round(float(value)))
    except (TypeError, ValueError):
        warnings.append("confidence unreadable, defaulted to 50")
        return 50
    if conf < 0 or conf > 100:
        warnings.append(f"confidence {conf} clamped to 0..100")
        conf = min(100, max(0, conf))
    return conf


def _from_object(obj) -> tuple[Label, int, str, list[str]] | None:
    if not isinstance(obj, dict):
        return None
    raw_label = obj.get("label")
    if not isinstance(raw_label, str):
        return None
    try:
        label = Label.parse(raw_label)
    except Exception:
        return None
    warnings: list[str] = []
    conf = _coerce_confidence(obj.get("confidence"), warnings)
    rationale = obj.get("rationale")
    if not isinstance(rationale, str):
        rationale = ""
    return label, conf, rationale, warnings


def _embedded_objects(text: str):
    """Yield each balanced top-level {...} span that parses as JSON."""
    depth = 0
    start = -1
    in_string = False
    escape = False
    for i, ch in enumerate(text):
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0:
                try:
                    yield json.loads(text[start:i + 1])
                except json.JSONDecodeError:
                    pass


def parse_verdict(text: str) -> tuple[Label, int, str, list[str]]:
    """Recover (label, confidence, rationale, warnings) from a model answer.

    Tries, in order: the whole answer as JSON (fenced or bare), any JSON
    object embedded in the answer, then labeled ``label:`` / ``confidence:``
    lines. Raises Unparseable when no path yields a label.
    """
    stripped = text.strip()
    fence = _FENCE.search(stripped)
    candidates = [stripped]
    if fence:
        candidates.insert(0, fence.group(1).strip())
    for candidate in candidates:
        try:
            parsed = _from_object(json.loads(candidate))
        except json.JSONDecodeError:
            continue
        if parsed:
            return parsed

    for obj in _embedded_objects(stripped):
        parsed = _from_object(obj)
        if parsed:
            return parsed

    label_match = _LABEL_LINE.search(stripped)
    if label_match:
        warnings = ["verdict recovered from labeled lines, not JSON"]
        label = Label.parse(label_match.group(1))
        conf_match = _CONF_LINE.search(stripped)
        conf = _coerce_confidence(conf_match.group(1) if conf_match else None,
                                  warnings)
        return label, conf, stripped, warnings

    raise Unparseable(f"no label found in model answer: {stripped[:120]!r}")


def majority_vote(votes: list[tuple[Label, int]]) -> tuple[Label, int, list[str]]:
    """Resolve votes to (label, confidence, warnings).

    A strict majority wins. On a count tie the label with the higher mean
    confidence wins; if the means tie too, the cautious choice is Fake.
    Returned confidence is the rounded mean over the winning label's votes.
    """
    if not votes:
        raise ValueError("majority_vote needs at least one vote")
    warnings: list[str] = []
    by_label: dict[Label, list[int]] = {}
    for label, conf in votes:
        by_label.setdefault(label, []).append(conf)
    top = max(len(v) for v in by_label.values())
    leaders = [label for label, confs in by_label.items() if len(confs) == top]
    if len(leaders) == 1:
        winner = leaders[0]
    else:
        means = {label: sum(by_label[label]) / len(by_label[label])
                 for label in leaders}
        best = max(means.values())
        tied = [label for label in leaders if means[label] == best]
        if len(tied) == 1:
            winner = tied[0]
            warnings.append("tied vote broken by mean confidence")
        else:
            winner = Label.Fake
            warnings.append("unresolvable tie, defaulting to fake")
    confs = by_label[winner]
    return winner, int(round(sum(confs) / len(confs))), warnings


# ---------------------------------------------------------------------------
# Shared plumbing

def _image_hashes(post: Post) -> tuple[str, ...]:
    return tuple(ref.hash for ref in post.images if ref.hash)


def _member_request(config: ReasonerConfig, template: PromptTemplate,
                    post: Post, evidence_text: str, *,
                    temperature: float = 0.0, seed: int | None = None,
                    ) -> LlmRequest:
    system, user = template.render(claim=post.text, evidence=evidence_text,
                                   images=describe_images(post))
    messages = []
    if system:
        messages.append(LlmMessage(role="system", text=system))
    messages.append(LlmMessage(role="user", text=user,
                               image_hashes=_image_hashes(post)))
    return LlmRequest(model_id=config.model_id, messages=tuple(messages),
                      temperature=temperature, seed=seed)


def _aux_request(config: ReasonerConfig, name: str, mapping: dict[str, str],
                 with_output: bool = True) -> LlmRequest:
    system, user = load_raw(name)
    user = render_placeholders(user, mapping)
    if with_output:
        user = f"{user}\n\n{output_instructions()}"
    messages = []
    if system:
        messages.append(LlmMessage(role="system", text=system))
    messages.append(LlmMessage(role="user", text=user))
    return LlmRequest(model_id=config.model_id, messages=tuple(messages))


def _usage_of(response: LlmResponse) -> TokenUsage:
    return response.usage


# ---------------------------------------------------------------------------
# Methods

def reason_cot(post: Post, bundle: EvidenceBundle, llm,
               config: ReasonerConfig = ReasonerConfig()) -> Verdict:
    """Single chain-of-thought call; one structured re-ask on parse failure."""
    evidence_text = describe_evidence(bundle.all_items())
    template = load_template(config.member_template)
    request = _member_request(config, template, post, evidence_text)
    try:
        response = llm.complete(request)
    except BackendError as exc:
        raise MethodFailed(ReasoningMethod.CoT, str(exc)) from exc
    usage = _usage_of(response)
    retry_count = 0
    warnings: list[str] = []
    try:
        label, conf, rationale, parse_warnings = parse_verdict(response.text)
    except Unparseable:
        retry_count = 1
        warnings.append("first answer unparseable, re-asked for structured output")
        reask = _aux_request(config, "reask_v1", {"previous": response.text})
        try:
            response = llm.complete(reask)
        except BackendError as exc:
            raise MethodFailed(ReasoningMethod.CoT,
                               f"re-ask failed: {exc}") from exc
        usage = usage + _usage_of(response)
        try:
            label, conf, rationale, parse_warnings = parse_verdict(response.text)
        except Unparseable as exc:
            raise MethodFailed(ReasoningMethod.CoT,
                               f"answer unparseable after re-ask: {exc}") from exc
    return Verdict(label=label, confidence=conf, rationale=rationale,
                   reasoning_method=ReasoningMethod.CoT,
                   model_id=config.model_id, token_usage=usage,
                   retry_count=retry_count,
                   warnings=tuple(warnings + parse_warnings))


def reason_ensemble(post: Post, bundle: EvidenceBundle, llm,
                    config: ReasonerConfig = ReasonerConfig()) -> Verdict:
    """n member calls with distinct framings, then one aggregation call.

    Tolerates member failures below half; the aggregation call failing falls
    back to a majority vote over the members that did answer.
    """
    evidence_text = describe_evidence(bundle.all_items())
    n = len(config.ensemble_templates)
    members: list[tuple[str, Label, int, str]] = []
    usage = TokenUsage()
    warnings: list[str] = []
    for name in config.ensemble_templates:
        template = load_template(name)
        request = _member_request(config, template, post, evidence_text)
        try:
            response = llm.complete(request)
            usage = usage + _usage_of(response)
            label, conf, rationale, _ = parse_verdict(response.text)
        except (BackendError, Unparseable) as exc:
            warnings.append(f"ensemble member {name} failed: {exc}")
            continue
        members.append((name, label, conf, rationale))
    failures = n - len(members)
    if 2 * failures >= n:
        raise MethodFailed(ReasoningMethod.Ensemble,
                           f"{failures} of {n} members failed")

    rendered = "\n".join(
        f"member {i} ({name}): label={label.value} confidence={conf}\n"
        f"  rationale: {rationale}"
        for i, (name, label, conf, rationale) in enumerate(members, start=1))
    aggregate = _aux_request(config, "aggregate_ensemble_v1",
                             {"claim": post.text, "responses": rendered})
    try:
        response = llm.complete(aggregate)
        usage = usage + _usage_of(response)
        label, conf, rationale, parse_warnings = parse_verdict(response.text)
        warnings.extend(parse_warnings)
    except (BackendError, Unparseable) as exc:
        warnings.append(f"aggregation failed, fell back to majority vote: {exc}")
        label, conf, vote_warnings = majority_vote(
            [(m_label, m_conf) for _, m_label, m_conf, _ in members])
        warnings.extend(vote_warnings)
        rationale = "; ".join(m_rationale for _, _, _, m_rationale in members
                              if m_rationale)
    return Verdict(label=label, confidence=conf, rationale=rationale,
                   reasoning_method=ReasoningMethod.Ensemble,
                   model_id=config.model_id, token_usage=usage,
                   warnings=tuple(warnings))


def reason_self_consistency(post: Post, bundle: EvidenceBundle, llm,
                            config: ReasonerConfig = ReasonerConfig()) -> Verdict:
    """k high-temperature samples of one prompt, resolved by majority vote.

    Seeds run 0..k-1 so a seed-honoring backend replays deterministically.
    More than half the samples failing fails the method; k=1 degenerates to
    a single sample with no voting.
    """
    evidence_text = describe_evidence(bundle.all_items())
    template = load_template(config.member_template)
    k = config.samples
    votes: list[tuple[Label, int]] = []
    rationales: list[str] = []
    usage = TokenUsage()
    warnings: list[str] = []
    for seed in range(k):
        request = _member_request(config, template, post, evidence_text,
                                  temperature=SELF_CONSISTENCY_TEMPERATURE,
                                  seed=seed)
        try:
            response = llm.complete(request)
            usage = usage + _usage_of(response)
            label, conf, rationale, _ = parse_verdict(response.text)
        except (BackendError, Unparseable) as exc:
            warnings.append(f"sample {seed} failed: {exc}")
            continue
        votes.append((label, conf))
        if rationale:
            rationales.append(rationale)
    if 2 * len(votes) < k:
        raise MethodFailed(ReasoningMethod.SelfConsistency,
                           f"{k - len(votes)} of {k} samples failed")
    label, conf, vote_warnings = majority_vote(votes)
    warnings.extend(vote_warnings)
    rationale = rationales[0] if rationales else ""
    return Verdict(label=label, confidence=conf, rationale=rationale,
                   reasoning_method=ReasoningMethod.SelfConsistency,
                   model_id=config.model_id, token_usage=usage,
                   warnings=tuple(warnings))


def _describe_intermediates(intermediates: list[IntermediateJudgment]) -> str:
    if not intermediates:
        return "(no evidence available; judge from the claim and images alone)"
    lines = []
    for judgment in intermediates:
        name = STRATEGY_LABELS.get(judgment.strategy_id,
                                   f"strategy {judgment.strategy_id}")
        if not judgment.available:
            lines.append(f"- {name}: unavailable ({judgment.rationale})")
            continue
        lines.append(f"- {name}: label={judgment.label.value} "
                     f"confidence={judgment.confidence}\n"
                     f"  rationale: {judgment.rationale}")
    return "\n".join(lines)


def reason_multistep(post: Post, bundle: EvidenceBundle, llm,
                     config: ReasonerConfig = ReasonerConfig()) -> Verdict:
    """One judgment call per evidence group, then one aggregation call.

    Every group gets a call, empty ones included, so the call budget is
    always ``len(groups) + 1``. A failed group call yields an unavailable
    intermediate rather than aborting. With no groups at all the method
    degenerates to the single aggregation call.
    """
    usage = TokenUsage()
    warnings: list[str] = []
    intermediates: list[IntermediateJudgment] = []
    for sid in sorted(bundle.groups):
        items = bundle.groups[sid]
        name = STRATEGY_LABELS.get(sid, f"strategy {sid}")
        request = _aux_request(config, "multistep_group_v1", {
            "claim": post.text,
            "images": describe_images(post),
            "source": name,
            "evidence": describe_evidence(items),
        })
        try:
            response = llm.complete(request)
            usage = usage + _usage_of(response)
            label, conf, rationale, _ = parse_verdict(response.text)
        except (BackendError, Unparseable) as exc:
            warnings.append(f"group {sid} judgment failed: {exc}")
            intermediates.append(IntermediateJudgment(
                strategy_id=sid, label=None, confidence=None,
                rationale=str(exc), available=False))
            continue
        intermediates.append(IntermediateJudgment(
            strategy_id=sid, label=label, confidence=conf,
            rationale=rationale))

    aggregate = _aux_request(config, "aggregate_multistep_v1", {
        "claim": post.text,
        "images": describe_images(post),
        "intermediates": _describe_intermediates(intermediates),
    })
    try:
        response = llm.complete(aggregate)
        usage = usage + _usage_of(response)
        label, conf, rationale, parse_warnings = parse_verdict(response.text)
        warnings.extend(parse_warnings)
    except (BackendError, Unparseable) as exc:
        available = [j for j in intermediates if j.available]
        if not available:
            raise MethodFailed(ReasoningMethod.MultiStep,
                               f"aggregation failed with no usable "
                               f"intermediates: {exc}") from exc
        warnings.append(f"aggregation failed, fell back to majority vote: {exc}")
        label, conf, vote_warnings = majority_vote(
            [(j.label, j.confidence) for j in available])
        warnings.extend(vote_warnings)
        rationale = "; ".join(j.rationale for j in available if j.rationale)
    return Verdict(label=label, confidence=conf, rationale=rationale,
                   reasoning_method=ReasoningMethod.MultiStep,
                   model_id=config.model_id, token_usage=usage,
                   intermediates=tuple(intermediates),
                   warnings=tuple(warnings))


_METHODS = {
    ReasoningMethod.CoT: reason_cot,
    ReasoningMethod.Ensemble: reason_ensemble,
    ReasoningMethod.SelfConsistency: reason_self_consistency,
    ReasoningMethod.MultiStep: reason_multistep,
}


def reason(post: Post, bundle: EvidenceBundle, method: ReasoningMethod, llm,
           config: ReasonerConfig = ReasonerConfig()) -> Verdict:
    """Dispatch to the requested reasoning method."""
    return _METHODS[ReasoningMethod(method)](post, bundle, llm, config)
