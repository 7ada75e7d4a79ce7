"""Loading and rendering of the versioned prompt template files.

Templates live as text files under ``claimcheck/prompts/`` with ``[system]``
and ``[user]`` sections. Verdict-producing member templates must use each of
the placeholders {claim}, {evidence}, {images} exactly once; every member
template shares one structured-output clause so a single parser handles all
model answers. Placeholders are substituted by literal replacement, so claim
or evidence text containing braces cannot break rendering.

The wording of all templates is a reconstruction: it approximates the
described prompting behavior and is versioned so changes are auditable.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib.resources import files

from .models import EvidenceItem, Post

MEMBER_PLACEHOLDERS = ("{claim}", "{evidence}", "{images}")


def _read_prompt_file(name: str) -> tuple[str, str]:
    text = (files("claimcheck") / "prompts" / f"{name}.txt").read_text(encoding="utf-8")
    sections: dict[str, list[str]] = {}
    current: list[str] | None = None
    for line in text.splitlines():
        stripped = line.strip()
        if stripped in ("[system]", "[user]"):
            current = sections.setdefault(stripped[1:-1], [])
            continue
        if current is not None:
            current.append(line)
    system = "\n".join(sections.get("system", [])).strip()
    user = "\n".join(sections.get("user", [])).strip()
    if not user:
        raise ValueError(f"prompt file {name!r} has no [user] section")
    return system, user


def render_placeholders(text: str, mapping: dict[str, str]) -> str:
    for key, value in mapping.items():
        text = text.replace("{" + key + "}", value)
    return text


@dataclass(frozen=True)
class PromptTemplate:
    """A verdict-producing template: system text, user template, output clause."""

    name: str
    system_text: str
    user_template: str
    output_instructions: str

    def __post_init__(self) -> None:
        for placeholder in MEMBER_PLACEHOLDERS:
            count = self.user_template.count(placeholder)
            if count != 1:
                raise ValueError(
                    f"template {self.name!r} must use {placeholder} exactly once, "
                    f"found {count}")

    def render(self, claim: str, evidence: str, images: str) -> tuple[str, str]:
        """Return (system text, user text) with placeholders filled."""
        user = render_placeholders(
            self.user_template, {"claim": claim, "evidence": evidence, "images": images})
        return self.system_text, f"{user}\n\n{self.output_instructions}"


def output_instructions() -> str:
    return (files("claimcheck") / "prompts" / "output_instructions.txt") \
        .read_text(encoding="utf-8").strip()


def load_template(name: str) -> PromptTemplate:
    system, user = _read_prompt_file(name)
    return PromptTemplate(name=name, system_text=system, user_template=user,
                          output_instructions=output_instructions())


def load_raw(name: str) -> tuple[str, str]:
    """Load an auxiliary prompt (aggregation, query generation, extraction)."""
    return _read_prompt_file(name)


DEFAULT_MEMBER_TEMPLATE = "cot_v1"
DEFAULT_ENSEMBLE_TEMPLATES = ("cot_v1", "skeptic_v1", "journalist_v1")


def describe_images(post: Post) -> str:
    """One line per attached image, stable across runs."""
    lines = []
    for i, ref in enumerate(post.images, start=1):
        ident = ref.hash or ref.url or ref.path or "unknown"
        lines.append(f"image {i}: {ident}")
    return "\n".join(lines)


def describe_evidence(items: tuple[EvidenceItem, ...] | list[EvidenceItem]) -> str:
    """Render evidence items as numbered lines for inclusion in a prompt.

    Items with no retrieved text still surface their source so the model can
    weigh domain reputation.
    """
    if not items:
        return "(no evidence retrieved)"
    lines = []
    for i, item in enumerate(items, start=1):
        parts = [f"[{i}] source: {item.domain or item.source_url or 'unknown'}"]
        if item.title:
            parts.append(f"title: {item.title}")
        if item.published_date:
            parts.append(f"date: {item.published_date.isoformat()}")
        if item.body:
            parts.append(f"text: {item.body}")
        if item.kind.value == "image" and item.image_ref is not None:
            ident = item.image_ref.hash or item.image_ref.url or "unknown"
            parts.append(f"matched image: {ident}")
        lines.append(" | ".join(parts))
    return "\n".join(lines)
