"""Second stage of the pipeline: intent + question -> rule-based query -> answer.

Entity extraction scans the normalized question for the longest
non-overlapping surface matches (greedy left-to-right, longest-first);
same-length candidates at one position resolve by kind priority (parameter,
component, term, relationship) then id. Each intent has a fixed binding
signature, and answers come out in fixed formats:

    definition            "<Name>: <definition>"
    default_value         "<name>: <default_value> <unit>"
    units                 "<name>: <unit>"
    goal / getting_started / system_requirements
                          the single guide section body of that affinity
    howto                 best title-overlap section body, else a pointer
                          listing the guide links

How-to section matching counts shared non-stopword title tokens; zero
overlap falls back to the pointer answer rather than an error, mirroring
guides that answer unknown procedures with a link.
"""

from __future__ import annotations

from dataclasses import dataclass

from .classify import STOPWORDS, IntentCategory
from .errors import MissingEntity, RecordNotFound
from .kb import (
    KIND_PRIORITY,
    EntityKind,
    KnowledgeBase,
    SectionAffinity,
    normalize_surface,
)

_KIND_RANK = {kind: rank for rank, kind in enumerate(KIND_PRIORITY)}

# Binding role per entity kind.
_ROLE_FOR_KIND = {
    EntityKind.TERM: "term",
    EntityKind.PARAMETER: "parameter",
    EntityKind.COMPONENT: "component",
    EntityKind.RELATIONSHIP: "relationship",
}

_SECTION_AFFINITY_FOR_INTENT = {
    IntentCategory.GOAL: SectionAffinity.GOAL,
    IntentCategory.GETTING_STARTED: SectionAffinity.GETTING_STARTED,
    IntentCategory.SYSTEM_REQUIREMENTS: SectionAffinity.SYSTEM_REQUIREMENTS,
}

POINTER_LEAD = "That topic is covered in the guide. These references should help:"
POINTER_FALLBACK = "That topic is covered in the tool's user guide."


@dataclass(frozen=True)
class Query:
    intent: IntentCategory
    bindings: tuple[tuple[str, str], ...]  # role -> record id, sorted pairs
    raw_question: str

    def binding(self, role: str) -> str | None:
        return dict(self.bindings).get(role)


@dataclass(frozen=True)
class AnswerPayload:
    text: str
    source_ids: tuple[str, ...]
    intent: IntentCategory


def extract_entities(knowledge: KnowledgeBase, question: str) -> dict[str, str]:
    """Map binding roles to entity ids found in the question text.

    Spans never overlap and never split a matched surface; the first match
    of each kind wins its role.
    """
    tokens = normalize_surface(question).split()
    if not tokens:
        return {}
    max_len = max((len(surface.split()) for surface in knowledge.surface_index), default=0)
    roles: dict[str, str] = {}
    i = 0
    while i < len(tokens):
        matched = False
        for span in range(min(max_len, len(tokens) - i), 0, -1):
            phrase = " ".join(tokens[i:i + span])
            ids = knowledge.surface_index.get(phrase)
            if not ids:
                continue
            # ids are already ordered by kind priority then id
            entity = knowledge.entity(ids[0])
            role = _ROLE_FOR_KIND[entity.kind]
            roles.setdefault(role, entity.id)
            i += span
            matched = True
            break
        if not matched:
            i += 1
    return roles


def _title_tokens(text: str) -> set[str]:
    return {t for t in normalize_surface(text).split() if t not in STOPWORDS}


def match_section(knowledge: KnowledgeBase, question: str):
    """How-to section whose title shares the most non-stopword tokens; ties
    go to the lowest id; zero overlap means no match."""
    question_tokens = _title_tokens(question)
    best = None
    best_score = 0
    for section in sorted(knowledge.sections_of_affinity(SectionAffinity.HOWTO), key=lambda s: s.id):
        score = len(question_tokens & _title_tokens(section.title))
        if score > best_score:
            best, best_score = section, score
    return best


def build_query(intent: IntentCategory, bindings: dict[str, str], question: str,
                knowledge: KnowledgeBase | None = None) -> Query:
    """Check the intent's binding signature and produce an executable query.

    Raises MissingEntity when the signature cannot be satisfied; that routes
    the caller to the IDK path even when classifier confidence is high.
    """
    kept: dict[str, str] = {}
    if intent is IntentCategory.DEFINITION:
        target = bindings.get("parameter") or bindings.get("term")
        if target is None:
            raise MissingEntity(intent, "term or parameter")
        role = "parameter" if bindings.get("parameter") else "term"
        kept[role] = target
    elif intent in (IntentCategory.DEFAULT_VALUE, IntentCategory.UNITS):
        if "parameter" not in bindings:
            raise MissingEntity(intent, "parameter")
        kept["parameter"] = bindings["parameter"]
    elif intent is IntentCategory.HOWTO:
        if knowledge is not None:
            section = match_section(knowledge, question)
            if section is not None:
                kept["section"] = section.id
    # goal / getting_started / system_requirements take no bindings
    return Query(intent=intent, bindings=tuple(sorted(kept.items())), raw_question=question)


def _capitalize_first(name: str) -> str:
    return name[0].upper() + name[1:] if name else name


def _require_entity(knowledge: KnowledgeBase, entity_id: str):
    entity = knowledge.entity(entity_id)
    if entity is None:
        raise RecordNotFound(entity_id)
    return entity


def pointer_answer(knowledge: KnowledgeBase) -> AnswerPayload:
    """Fixed how-to fallback: list the guide links carried by sections."""
    linked = [s for s in sorted(knowledge.sections, key=lambda s: s.id) if s.link]
    seen: list[str] = []
    sources: list[str] = []
    for section in linked:
        if section.link not in seen:
            seen.append(section.link)
            sources.append(section.id)
    if not seen:
        return AnswerPayload(text=POINTER_FALLBACK, source_ids=(), intent=IntentCategory.HOWTO)
    lines = [POINTER_LEAD] + [f"- {link}" for link in seen]
    return AnswerPayload(text="\n".join(lines), source_ids=tuple(sources), intent=IntentCategory.HOWTO)


def execute(knowledge: KnowledgeBase, query: Query) -> AnswerPayload:
    """Run a validated query against the knowledge base."""
    intent = query.intent
    if intent is IntentCategory.DEFINITION:
        entity_id = query.binding("parameter") or query.binding("term")
        entity = _require_entity(knowledge, entity_id)
        text = f"{_capitalize_first(entity.name)}: {entity.definition}"
        return AnswerPayload(text=text, source_ids=(entity.id,), intent=intent)
    if intent is IntentCategory.DEFAULT_VALUE:
        entity = _require_entity(knowledge, query.binding("parameter"))
        return AnswerPayload(text=f"{entity.name}: {entity.default_value} {entity.unit}",
                             source_ids=(entity.id,), intent=intent)
    if intent is IntentCategory.UNITS:
        entity = _require_entity(knowledge, query.binding("parameter"))
        return AnswerPayload(text=f"{entity.name}: {entity.unit}",
                             source_ids=(entity.id,), intent=intent)
    if intent in _SECTION_AFFINITY_FOR_INTENT:
        affinity = _SECTION_AFFINITY_FOR_INTENT[intent]
        sections = sorted(knowledge.sections_of_affinity(affinity), key=lambda s: s.id)
        if not sections:
            raise RecordNotFound(affinity.value)
        section = sections[0]
        return AnswerPayload(text=section.body, source_ids=(section.id,), intent=intent)
    # howto
    section_id = query.binding("section")
    if section_id is None:
        return pointer_answer(knowledge)
    section = knowledge.section(section_id)
    if section is None:
        raise RecordNotFound(section_id)
    return AnswerPayload(text=section.body, source_ids=(section.id,), intent=intent)
