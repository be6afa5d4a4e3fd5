"""Knowledge base: the machine-readable User Guide.

A knowledge file is one UTF-8 JSON document:

    {
      "version": 1,
      "entities": [
        {"id": "move_velocity", "kind": "parameter", "name": "move velocity",
         "synonyms": ["movement speed"], "definition": "...",
         "unit": "m/s", "default_value": "0", "applies_to": ["biotic_substance"]},
        ...
      ],
      "sections": [
        {"id": "goal", "title": "...", "affinity": "goal", "body": "...", "link": null},
        ...
      ]
    }

Unknown keys are rejected. ``unit``, ``default_value`` and ``applies_to``
belong to parameters only. The loaded KnowledgeBase is immutable; reloading
produces a new value that the owner swaps in atomically.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import ParseError, ValidationError


class EntityKind(Enum):
    TERM = "term"
    PARAMETER = "parameter"
    COMPONENT = "component"
    RELATIONSHIP = "relationship"


# Lookup priority when one surface names entities of several kinds.
KIND_PRIORITY = (
    EntityKind.PARAMETER,
    EntityKind.COMPONENT,
    EntityKind.TERM,
    EntityKind.RELATIONSHIP,
)
_KIND_RANK = {kind: rank for rank, kind in enumerate(KIND_PRIORITY)}


class SectionAffinity(Enum):
    HOWTO = "howto"
    GETTING_STARTED = "getting_started"
    GOAL = "goal"
    SYSTEM_REQUIREMENTS = "system_requirements"


def normalize_surface(text: str) -> str:
    """Lowercase, collapse whitespace, strip punctuation at token edges."""
    tokens = []
    for token in text.lower().split():
        token = token.strip(string.punctuation)
        if token:
            tokens.append(token)
    return " ".join(tokens)


@dataclass(frozen=True)
class OntologyEntity:
    id: str
    kind: EntityKind
    name: str
    synonyms: tuple[str, ...] = ()
    definition: str = ""
    unit: str | None = None          # parameters only
    default_value: str | None = None  # parameters only, verbatim text
    applies_to: tuple[str, ...] = ()  # parameters only, component ids

    def surfaces(self):
        return (self.name,) + self.synonyms


@dataclass(frozen=True)
class GuideSection:
    id: str
    title: str
    affinity: SectionAffinity
    body: str
    link: str | None = None


@dataclass(frozen=True)
class KnowledgeBase:
    entities: tuple[OntologyEntity, ...]
    sections: tuple[GuideSection, ...]
    version: int = 1
    # surface_index maps normalized surface -> entity ids in priority order
    surface_index: dict[str, tuple[str, ...]] = field(default_factory=dict, compare=False)
    _by_id: dict[str, OntologyEntity] = field(default_factory=dict, compare=False, repr=False)
    _sections_by_id: dict[str, GuideSection] = field(default_factory=dict, compare=False, repr=False)

    def entity(self, entity_id: str) -> OntologyEntity | None:
        return self._by_id.get(entity_id)

    def section(self, section_id: str) -> GuideSection | None:
        return self._sections_by_id.get(section_id)

    def record(self, record_id: str):
        """Entity or section carrying this id, else None."""
        return self._by_id.get(record_id) or self._sections_by_id.get(record_id)

    def entities_of_kind(self, kind: EntityKind) -> tuple[OntologyEntity, ...]:
        return tuple(e for e in self.entities if e.kind == kind)

    def sections_of_affinity(self, affinity: SectionAffinity) -> tuple[GuideSection, ...]:
        return tuple(s for s in self.sections if s.affinity == affinity)


_ENTITY_KEYS = {"id", "kind", "name", "synonyms", "definition", "unit", "default_value", "applies_to"}
_PARAMETER_ONLY_KEYS = {"unit", "default_value", "applies_to"}
_SECTION_KEYS = {"id", "title", "affinity", "body", "link"}
_TOP_KEYS = {"version", "entities", "sections"}


def _require(condition, message):
    if not condition:
        raise ParseError(message)


def _parse_entity(raw) -> OntologyEntity:
    _require(isinstance(raw, dict), "entity must be an object")
    unknown = set(raw) - _ENTITY_KEYS
    _require(not unknown, f"entity {raw.get('id', '?')!r} has unknown keys {sorted(unknown)}")
    for key in ("id", "kind", "name"):
        _require(isinstance(raw.get(key), str) and raw[key], f"entity missing {key!r}")
    try:
        kind = EntityKind(raw["kind"])
    except ValueError:
        raise ParseError(f"entity {raw['id']!r} has unknown kind {raw['kind']!r}") from None
    synonyms = raw.get("synonyms", [])
    _require(isinstance(synonyms, list) and all(isinstance(s, str) for s in synonyms),
             f"entity {raw['id']!r}: synonyms must be a list of strings")
    definition = raw.get("definition", "")
    _require(isinstance(definition, str), f"entity {raw['id']!r}: definition must be a string")
    if kind is not EntityKind.PARAMETER:
        stray = _PARAMETER_ONLY_KEYS & set(raw)
        if stray:
            raise ValidationError(
                f"entity {raw['id']!r} is a {kind.value} but carries parameter keys {sorted(stray)}",
                offending_id=raw["id"])
    applies_to = raw.get("applies_to", [])
    _require(isinstance(applies_to, list) and all(isinstance(a, str) for a in applies_to),
             f"entity {raw['id']!r}: applies_to must be a list of ids")
    return OntologyEntity(
        id=raw["id"],
        kind=kind,
        name=raw["name"],
        synonyms=tuple(synonyms),
        definition=definition,
        unit=raw.get("unit"),
        default_value=raw.get("default_value"),
        applies_to=tuple(applies_to),
    )


def _parse_section(raw) -> GuideSection:
    _require(isinstance(raw, dict), "section must be an object")
    unknown = set(raw) - _SECTION_KEYS
    _require(not unknown, f"section {raw.get('id', '?')!r} has unknown keys {sorted(unknown)}")
    for key in ("id", "title", "affinity", "body"):
        _require(isinstance(raw.get(key), str), f"section missing {key!r}")
    try:
        affinity = SectionAffinity(raw["affinity"])
    except ValueError:
        raise ParseError(f"section {raw['id']!r} has unknown affinity {raw['affinity']!r}") from None
    link = raw.get("link")
    _require(link is None or isinstance(link, str), f"section {raw['id']!r}: link must be a string or null")
    return GuideSection(id=raw["id"], title=raw["title"], affinity=affinity, body=raw["body"], link=link)


def _validate(entities, sections, version) -> KnowledgeBase:
    by_id: dict[str, OntologyEntity] = {}
    for entity in entities:
        if entity.id in by_id:
            raise ValidationError(f"duplicate entity id {entity.id!r}", offending_id=entity.id)
        if not normalize_surface(entity.name):
            raise ValidationError(f"entity {entity.id!r} has an empty name", offending_id=entity.id)
        for synonym in entity.synonyms:
            if not normalize_surface(synonym):
                raise ValidationError(f"entity {entity.id!r} has an empty synonym", offending_id=entity.id)
        if not entity.definition.strip():
            raise ValidationError(f"entity {entity.id!r} has an empty definition", offending_id=entity.id)
        if entity.kind is EntityKind.PARAMETER:
            if not entity.unit or entity.default_value is None or entity.default_value == "":
                raise ValidationError(
                    f"parameter {entity.id!r} is missing unit or default_value", offending_id=entity.id)
        by_id[entity.id] = entity

    sections_by_id: dict[str, GuideSection] = {}
    for section in sections:
        if section.id in sections_by_id or section.id in by_id:
            raise ValidationError(f"duplicate section id {section.id!r}", offending_id=section.id)
        if not section.body.strip():
            raise ValidationError(f"section {section.id!r} has an empty body", offending_id=section.id)
        sections_by_id[section.id] = section

    component_ids = {e.id for e in entities if e.kind is EntityKind.COMPONENT}
    for entity in entities:
        for target in entity.applies_to:
            if target not in component_ids:
                raise ValidationError(
                    f"parameter {entity.id!r} applies_to unknown component {target!r}",
                    offending_id=entity.id)

    # Same-kind surface collisions are errors; cross-kind ones are allowed and
    # resolved by kind priority at lookup time.
    seen: dict[tuple[str, EntityKind], str] = {}
    index: dict[str, list[str]] = {}
    for entity in entities:
        for surface in entity.surfaces():
            normalized = normalize_surface(surface)
            key = (normalized, entity.kind)
            holder = seen.get(key)
            if holder is not None and holder != entity.id:
                raise ValidationError(
                    f"surface {normalized!r} is claimed by both {holder!r} and {entity.id!r}",
                    offending_id=entity.id)
            seen[key] = entity.id
            bucket = index.setdefault(normalized, [])
            if entity.id not in bucket:
                bucket.append(entity.id)

    surface_index = {
        surface: tuple(sorted(ids, key=lambda eid: (_KIND_RANK[by_id[eid].kind], eid)))
        for surface, ids in sorted(index.items())
    }
    return KnowledgeBase(
        entities=tuple(entities),
        sections=tuple(sections),
        version=version,
        surface_index=surface_index,
        _by_id=by_id,
        _sections_by_id=sections_by_id,
    )


def from_dict(document) -> KnowledgeBase:
    _require(isinstance(document, dict), "knowledge file must be a JSON object")
    unknown = set(document) - _TOP_KEYS
    _require(not unknown, f"unknown top-level keys {sorted(unknown)}")
    version = document.get("version", 1)
    _require(isinstance(version, int) and version >= 1, "version must be a positive integer")
    raw_entities = document.get("entities", [])
    raw_sections = document.get("sections", [])
    _require(isinstance(raw_entities, list), "entities must be an array")
    _require(isinstance(raw_sections, list), "sections must be an array")
    entities = [_parse_entity(raw) for raw in raw_entities]
    sections = [_parse_section(raw) for raw in raw_sections]
    return _validate(entities, sections, version)


def load_guide(path) -> KnowledgeBase:
    """Load and validate a knowledge file. Deterministic for identical bytes."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    return from_dict(document)


def to_dict(kb: KnowledgeBase) -> dict:
    """Serialization that round-trips through from_dict field-by-field."""
    entities = []
    for entity in kb.entities:
        raw = {
            "id": entity.id,
            "kind": entity.kind.value,
            "name": entity.name,
            "synonyms": list(entity.synonyms),
            "definition": entity.definition,
        }
        if entity.kind is EntityKind.PARAMETER:
            raw["unit"] = entity.unit
            raw["default_value"] = entity.default_value
            raw["applies_to"] = list(entity.applies_to)
        entities.append(raw)
    sections = [
        {"id": s.id, "title": s.title, "affinity": s.affinity.value, "body": s.body, "link": s.link}
        for s in kb.sections
    ]
    return {"version": kb.version, "entities": entities, "sections": sections}


def save_guide(kb: KnowledgeBase, path) -> None:
    Path(path).write_text(json.dumps(to_dict(kb), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def lookup_surface(kb: KnowledgeBase, phrase: str) -> list[tuple[str, EntityKind]]:
    """Exact match of a normalized phrase against entity names and synonyms.

    Results are ordered by kind priority (parameter, component, term,
    relationship) and then by id; no match yields an empty list.
    """
    normalized = normalize_surface(phrase)
    if not normalized:
        return []
    ids = kb.surface_index.get(normalized, ())
    return [(entity_id, kb.entity(entity_id).kind) for entity_id in ids]
