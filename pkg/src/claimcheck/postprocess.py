"""Evidence post-processing: domain filtering and relevance extraction.

Filtering removes items from known low-credibility domains and from excluded
sources (the venues a post circulates on, plus outlets held out to avoid
circular confirmation). Extraction asks the LLM to condense each textual
item to the part that bears on the claim, dropping items the model marks
irrelevant. Both steps preserve group structure and re-compact ranks.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from importlib.resources import files
from pathlib import Path

from .backends.errors import BackendError
from .backends.llm import LlmMessage, LlmRequest
from .models import EvidenceBundle, EvidenceItem, EvidenceKind, TokenUsage
from .prompting import describe_evidence, load_raw, render_placeholders
from .webdomains import registrable_domain

log = logging.getLogger(__name__)

EXCERPT_MAX_CHARS = 600
IRRELEVANT_MARKER = "IRRELEVANT"


def load_domain_list(path: str | Path) -> frozenset[str]:
    """Read one registrable domain per line; '#' starts a comment."""
    domains = set()
    for raw_line in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if line:
            domains.add(registrable_domain(line))
    return frozenset(domains)


def _packaged_list(name: str) -> frozenset[str]:
    text = (files("claimcheck") / "data" / name).read_text(encoding="utf-8")
    domains = set()
    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if line:
            domains.add(registrable_domain(line))
    return frozenset(domains)


@dataclass(frozen=True)
class DomainPolicy:
    """Which evidence domains to drop.

    ``allow_override`` punches holes in the blocklist for deployments that
    trust a listed domain after all; it does not override source exclusions.
    """

    blocklist: frozenset[str] = field(default_factory=frozenset)
    source_exclusions: frozenset[str] = field(default_factory=frozenset)
    allow_override: frozenset[str] = field(default_factory=frozenset)

    def effective_blocklist(self) -> frozenset[str]:
        return self.blocklist - self.allow_override

    def keeps(self, domain: str) -> bool:
        return (domain not in self.effective_blocklist()
                and domain not in self.source_exclusions)


def default_policy() -> DomainPolicy:
    return DomainPolicy(
        blocklist=_packaged_list("blocklist_default.txt"),
        source_exclusions=_packaged_list("source_exclusions_default.txt"),
    )


def _recompact(items: list[EvidenceItem]) -> tuple[EvidenceItem, ...]:
    return tuple(replace(item, rank=i) for i, item in enumerate(items, start=1))


def domain_filter(bundle: EvidenceBundle, policy: DomainPolicy) -> EvidenceBundle:
    """Drop blocked/excluded domains from every group.

    Order within a group is preserved and ranks are re-compacted from 1.
    Idempotent: a second pass with the same policy changes nothing.
    """
    groups: dict[int, tuple[EvidenceItem, ...]] = {}
    warnings = list(bundle.warnings)
    for sid, items in bundle.groups.items():
        kept = [item for item in items if policy.keeps(item.domain)]
        dropped = len(items) - len(kept)
        if dropped:
            warnings.append(f"domain filter: dropped {dropped} item(s) "
                            f"from strategy {sid}")
        groups[sid] = _recompact(kept)
    return replace(bundle, groups=groups, warnings=tuple(warnings))


def extract_evidence(bundle: EvidenceBundle, claim: str, llm,
                     model_id: str = "stub",
                     max_chars: int = EXCERPT_MAX_CHARS,
                     ) -> tuple[EvidenceBundle, TokenUsage]:
    """Condense each textual item to its claim-relevant part.

    Items the model marks IRRELEVANT are dropped. Image items and items with
    no snippet pass through untouched. A failed extraction call keeps the
    original item (failing open loses precision, not evidence) and adds a
    warning. Returns the new bundle and the accumulated token usage.
    """
    system, user_template = load_raw("extract_v1")
    usage = TokenUsage()
    warnings = list(bundle.warnings)
    groups: dict[int, tuple[EvidenceItem, ...]] = {}
    for sid, items in bundle.groups.items():
        kept: list[EvidenceItem] = []
        for item in items:
            if item.kind is EvidenceKind.Image or not item.body:
                kept.append(item)
                continue
            user = render_placeholders(user_template, {
                "claim": claim,
                "evidence": describe_evidence([item]),
            })
            messages = []
            if system:
                messages.append(LlmMessage(role="system", text=system))
            messages.append(LlmMessage(role="user", text=user))
            try:
                response = llm.complete(
                    LlmRequest(model_id=model_id, messages=tuple(messages)))
            except BackendError as exc:
                warnings.append(f"extraction failed for strategy {sid} "
                                f"rank {item.rank}, kept original: {exc}")
                kept.append(item)
                continue
            usage = usage + response.usage
            reply = response.text.strip()
            if reply.upper() == IRRELEVANT_MARKER:
                continue
            kept.append(replace(item, body=reply[:max_chars]))
        groups[sid] = _recompact(kept)
    return replace(bundle, groups=groups, warnings=tuple(warnings)), usage
