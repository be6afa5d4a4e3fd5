"""Training-corpus generator: question templates projected onto the ontology.

Template patterns are plain text with two constructs:

    {slot:KIND}   typed slot, KIND in {Term, Parameter, Component,
                  Relationship, Section}
    (a|b|c)       alternation group of literal arms

Expansion takes the Cartesian product of every alternation arm with every
knowledge-base record of each slot's kind (entities by id, arms in written
order), so |expand| = prod(arm counts) * prod(kind counts). Section slots
range over the how-to sections and are filled with section titles; entity
slots are filled with canonical names (synonym robustness is the
classifier's job, which keeps labels unambiguous).

Each template also names the answer rule that yields the expected answer id
for every generated question; rule and intent must agree (a default_value
question cannot be answered by a goal rule), and the rule's slot kind must be
one the query layer can bind.
"""

from __future__ import annotations

import itertools
import json
import re
import string
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .classify import IntentCategory
from .errors import EmptyCorpus, ParseError, TemplateSyntaxError, ValidationError
from .kb import EntityKind, KnowledgeBase, SectionAffinity


class AnswerRule(Enum):
    DEFINITION = "definition"
    DEFAULT_VALUE = "default_value"
    UNITS = "units"
    SECTION_BODY = "section_body"
    GOAL_TEXT = "goal_text"
    SYSREQ_TEXT = "sysreq_text"
    GETTING_STARTED_TEXT = "getting_started_text"


SLOT_KINDS = {
    "Term": EntityKind.TERM,
    "Parameter": EntityKind.PARAMETER,
    "Component": EntityKind.COMPONENT,
    "Relationship": EntityKind.RELATIONSHIP,
    "Section": "section",
}

# Which slot kinds may feed each answer rule; None means the rule takes no slot.
# Definitions exist for every entity kind, though the query layer only binds
# terms and parameters; authors of component/relationship templates accept
# that those questions resolve through the IDK path at serving time.
_RULE_SLOT_KINDS = {
    AnswerRule.DEFINITION: {"Term", "Parameter", "Component", "Relationship"},
    AnswerRule.DEFAULT_VALUE: {"Parameter"},
    AnswerRule.UNITS: {"Parameter"},
    AnswerRule.SECTION_BODY: {"Section"},
    AnswerRule.GOAL_TEXT: None,
    AnswerRule.SYSREQ_TEXT: None,
    AnswerRule.GETTING_STARTED_TEXT: None,
}

_RULE_FOR_INTENT = {
    IntentCategory.DEFINITION: AnswerRule.DEFINITION,
    IntentCategory.DEFAULT_VALUE: AnswerRule.DEFAULT_VALUE,
    IntentCategory.UNITS: AnswerRule.UNITS,
    IntentCategory.HOWTO: AnswerRule.SECTION_BODY,
    IntentCategory.GOAL: AnswerRule.GOAL_TEXT,
    IntentCategory.SYSTEM_REQUIREMENTS: AnswerRule.SYSREQ_TEXT,
    IntentCategory.GETTING_STARTED: AnswerRule.GETTING_STARTED_TEXT,
}

_RULE_AFFINITY = {
    AnswerRule.GOAL_TEXT: SectionAffinity.GOAL,
    AnswerRule.SYSREQ_TEXT: SectionAffinity.SYSTEM_REQUIREMENTS,
    AnswerRule.GETTING_STARTED_TEXT: SectionAffinity.GETTING_STARTED,
}


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class Slot:
    name: str
    kind: str  # key of SLOT_KINDS


@dataclass(frozen=True)
class Alternation:
    arms: tuple[str, ...]


@dataclass(frozen=True)
class QuestionTemplate:
    id: str
    intent: IntentCategory
    pattern: str
    answer_rule: AnswerRule
    answer_slot: str | None
    parts: tuple = field(compare=False, default=())

    @property
    def slots(self) -> dict[str, str]:
        return {p.name: p.kind for p in self.parts if isinstance(p, Slot)}


_SLOT_NAME_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*$")


def _parse_pattern(pattern: str, template_id: str):
    parts = []
    slot_count = 0
    seen_names = set()
    i = 0
    while i < len(pattern):
        ch = pattern[i]
        if ch == "{":
            end = pattern.find("}", i + 1)
            if end < 0:
                raise TemplateSyntaxError("unbalanced braces", template_id, i)
            inner = pattern[i + 1:end]
            if ":" not in inner:
                raise TemplateSyntaxError(f"slot {inner!r} must be written name:KIND", template_id, i)
            name, kind = inner.split(":", 1)
            if not _SLOT_NAME_RE.match(name):
                raise TemplateSyntaxError(f"bad slot name {name!r}", template_id, i)
            if kind not in SLOT_KINDS:
                raise TemplateSyntaxError(f"unknown KIND {kind!r}", template_id, i)
            if name in seen_names:
                raise TemplateSyntaxError(f"duplicate slot name {name!r}", template_id, i)
            seen_names.add(name)
            slot_count += 1
            if slot_count > 2:
                raise TemplateSyntaxError("more than 2 slots", template_id, i)
            parts.append(Slot(name=name, kind=kind))
            i = end + 1
        elif ch == "}":
            raise TemplateSyntaxError("unbalanced braces", template_id, i)
        elif ch == "(":
            end = pattern.find(")", i + 1)
            if end < 0:
                raise TemplateSyntaxError("unbalanced parentheses", template_id, i)
            inner = pattern[i + 1:end]
            if "(" in inner:
                raise TemplateSyntaxError("nested alternation groups are not supported", template_id, i)
            if "{" in inner or "}" in inner:
                raise TemplateSyntaxError("slots inside alternation groups are not supported", template_id, i)
            arms = inner.split("|")
            if any(not arm.strip() for arm in arms):
                raise TemplateSyntaxError("empty alternation arm", template_id, i)
            parts.append(Alternation(arms=tuple(arms)))
            i = end + 1
        elif ch == ")":
            raise TemplateSyntaxError("unbalanced parentheses", template_id, i)
        elif ch == "|":
            raise TemplateSyntaxError("alternation separator outside a group", template_id, i)
        else:
            j = i
            while j < len(pattern) and pattern[j] not in "{}()|":
                j += 1
            parts.append(Literal(text=pattern[i:j]))
            i = j
    return tuple(parts)


def template_from_dict(raw) -> QuestionTemplate:
    if not isinstance(raw, dict):
        raise ParseError("template entry must be an object")
    unknown = set(raw) - {"id", "intent", "pattern", "answer_rule", "answer_slot"}
    if unknown:
        raise ParseError(f"template {raw.get('id', '?')!r} has unknown keys {sorted(unknown)}")
    for key in ("id", "intent", "pattern", "answer_rule"):
        if not isinstance(raw.get(key), str) or not raw[key]:
            raise ParseError(f"template missing {key!r}")
    template_id = raw["id"]
    try:
        intent = IntentCategory(raw["intent"])
    except ValueError:
        raise ParseError(f"template {template_id!r} has unknown intent {raw['intent']!r}") from None
    try:
        rule = AnswerRule(raw["answer_rule"])
    except ValueError:
        raise ParseError(f"template {template_id!r} has unknown answer_rule {raw['answer_rule']!r}") from None
    if _RULE_FOR_INTENT[intent] is not rule:
        raise ParseError(
            f"template {template_id!r}: intent {intent.value!r} cannot be answered by rule {rule.value!r}")

    parts = _parse_pattern(raw["pattern"], template_id)
    slots = {p.name: p.kind for p in parts if isinstance(p, Slot)}
    allowed = _RULE_SLOT_KINDS[rule]
    answer_slot = raw.get("answer_slot")
    if allowed is None:
        if answer_slot is not None:
            raise TemplateSyntaxError(f"rule {rule.value} takes no answer slot", template_id)
    else:
        candidates = [name for name, kind in slots.items() if kind in allowed]
        if answer_slot is None:
            if len(candidates) != 1:
                raise TemplateSyntaxError(
                    f"rule {rule.value} needs exactly one {sorted(allowed)} slot or an explicit answer_slot",
                    template_id)
            answer_slot = candidates[0]
        elif answer_slot not in slots:
            raise TemplateSyntaxError(f"answer_slot {answer_slot!r} is not a pattern slot", template_id)
        elif slots[answer_slot] not in allowed:
            raise TemplateSyntaxError(
                f"answer_slot {answer_slot!r} has kind {slots[answer_slot]}, rule {rule.value} needs {sorted(allowed)}",
                template_id)
    return QuestionTemplate(
        id=template_id, intent=intent, pattern=raw["pattern"],
        answer_rule=rule, answer_slot=answer_slot, parts=parts,
    )


def parse_templates(path) -> list[QuestionTemplate]:
    """Read a template file: a JSON array of template objects, kept in file order."""
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    if not isinstance(document, list):
        raise ParseError("template file must be a JSON array")
    templates = [template_from_dict(raw) for raw in document]
    seen = set()
    for template in templates:
        if template.id in seen:
            raise ParseError(f"duplicate template id {template.id!r}")
        seen.add(template.id)
    return templates


@dataclass(frozen=True)
class TrainingExample:
    question: str
    intent: IntentCategory
    bindings: tuple[tuple[str, str], ...]  # slot name -> record id, as sorted pairs
    expected_answer_id: str
    template_id: str

    def binding_map(self) -> dict[str, str]:
        return dict(self.bindings)


@dataclass
class TrainingSet:
    examples: list[TrainingExample]
    per_intent_counts: dict[IntentCategory, int]
    lint_report: list[tuple[str, str]]  # (question, issue)

    @classmethod
    def from_examples(cls, examples, lint_report=()):
        counts: dict[IntentCategory, int] = {}
        for ex in examples:
            counts[ex.intent] = counts.get(ex.intent, 0) + 1
        return cls(examples=list(examples), per_intent_counts=counts, lint_report=list(lint_report))


def _fill_values(template: QuestionTemplate, knowledge: KnowledgeBase):
    """Per variable part: the (fill_text, record_id) choices, in deterministic order."""
    choices = []
    for part in template.parts:
        if isinstance(part, Alternation):
            choices.append([(arm, None, None) for arm in part.arms])
        elif isinstance(part, Slot):
            if part.kind == "Section":
                records = sorted(knowledge.sections_of_affinity(SectionAffinity.HOWTO),
                                 key=lambda s: s.id)
                choices.append([(s.title, part.name, s.id) for s in records])
            else:
                records = sorted(knowledge.entities_of_kind(SLOT_KINDS[part.kind]),
                                 key=lambda e: e.id)
                choices.append([(e.name, part.name, e.id) for e in records])
    return choices


def _expected_answer_id(template: QuestionTemplate, bindings: dict[str, str],
                        knowledge: KnowledgeBase) -> str | None:
    affinity = _RULE_AFFINITY.get(template.answer_rule)
    if affinity is not None:
        sections = sorted(knowledge.sections_of_affinity(affinity), key=lambda s: s.id)
        return sections[0].id if sections else None
    return bindings[template.answer_slot]


def expand(template: QuestionTemplate, knowledge: KnowledgeBase) -> list[TrainingExample]:
    """Project one template onto the knowledge base.

    Returns the full Cartesian product (no dedup); empty when a slot's kind
    has no records or a section-text rule has no section to point at.
    """
    choices = _fill_values(template, knowledge)
    examples = []
    for combo in itertools.product(*choices):
        fills = iter(combo)
        pieces = []
        bindings: dict[str, str] = {}
        for part in template.parts:
            if isinstance(part, Literal):
                pieces.append(part.text)
            else:
                text, slot_name, record_id = next(fills)
                pieces.append(text)
                if slot_name is not None:
                    bindings[slot_name] = record_id
        answer_id = _expected_answer_id(template, bindings, knowledge)
        if answer_id is None:
            return []
        examples.append(TrainingExample(
            question="".join(pieces),
            intent=template.intent,
            bindings=tuple(sorted(bindings.items())),
            expected_answer_id=answer_id,
            template_id=template.id,
        ))
    return examples


# ---------------------------------------------------------------------------
# Question linter

RESIDUAL_PLACEHOLDER = "ResidualPlaceholder"
MISSING_QUESTION_MARK = "MissingQuestionMark"
DOUBLE_SPACE = "DoubleSpace"
ARTICLE_DISAGREEMENT = "ArticleDisagreement"
NON_INTERROGATIVE_START = "NonInterrogativeStart"

INTERROGATIVES = frozenset({
    "what", "which", "how", "where", "when", "why", "who",
    "can", "does", "do", "is", "are",
})

_VOWELS = set("aeiou")


def lint_question(question: str) -> list[str]:
    """Surface-grammar checks over a generated question; returns issue names."""
    issues = []
    if any(ch in question for ch in "{}(|)"):
        issues.append(RESIDUAL_PLACEHOLDER)
    if not question.rstrip().endswith("?"):
        issues.append(MISSING_QUESTION_MARK)
    if "  " in question:
        issues.append(DOUBLE_SPACE)

    words = [w.strip(string.punctuation).lower() for w in question.split()]
    words = [w for w in words if w]
    for article, follower in zip(words, words[1:]):
        if not follower[0].isalpha():
            continue
        if article == "a" and follower[0] in _VOWELS:
            issues.append(ARTICLE_DISAGREEMENT)
            break
        if article == "an" and follower[0] not in _VOWELS:
            issues.append(ARTICLE_DISAGREEMENT)
            break
    if not words or words[0] not in INTERROGATIVES:
        issues.append(NON_INTERROGATIVE_START)
    return issues


def generate_dataset(templates, knowledge: KnowledgeBase) -> TrainingSet:
    """Expand all templates, dedup on exact question text (first wins), lint."""
    examples = []
    seen: set[str] = set()
    for template in templates:
        for example in expand(template, knowledge):
            if example.question in seen:
                continue
            seen.add(example.question)
            examples.append(example)
    if not examples:
        raise EmptyCorpus("templates produced zero examples against this knowledge base")
    lint_report = []
    for example in examples:
        for issue in lint_question(example.question):
            lint_report.append((example.question, issue))
    return TrainingSet.from_examples(examples, lint_report)


# ---------------------------------------------------------------------------
# Corpus and labeled-extras files: JSON Lines, one example per line.

def example_to_dict(example: TrainingExample) -> dict:
    return {
        "question": example.question,
        "intent": example.intent.value,
        "bindings": example.binding_map(),
        "expected_answer_id": example.expected_answer_id,
        "template_id": example.template_id,
    }


def example_from_dict(raw, line=None) -> TrainingExample:
    if not isinstance(raw, dict):
        raise ParseError("corpus record must be an object", line=line)
    unknown = set(raw) - {"question", "intent", "bindings", "expected_answer_id", "template_id"}
    if unknown:
        raise ParseError(f"corpus record has unknown keys {sorted(unknown)}", line=line)
    for key in ("question", "intent", "expected_answer_id"):
        if not isinstance(raw.get(key), str) or not raw[key]:
            raise ParseError(f"corpus record missing {key!r}", line=line)
    try:
        intent = IntentCategory(raw["intent"])
    except ValueError:
        raise ParseError(f"unknown intent {raw['intent']!r}", line=line) from None
    if any(ch in raw["question"] for ch in "{}"):
        raise ParseError(f"question {raw['question']!r} contains residual placeholders", line=line)
    bindings = raw.get("bindings", {})
    if not isinstance(bindings, dict):
        raise ParseError("bindings must be an object", line=line)
    return TrainingExample(
        question=raw["question"],
        intent=intent,
        bindings=tuple(sorted((str(k), str(v)) for k, v in bindings.items())),
        expected_answer_id=raw["expected_answer_id"],
        template_id=str(raw.get("template_id", "user")),
    )


def write_corpus(examples, path) -> None:
    lines = [json.dumps(example_to_dict(ex), sort_keys=True, ensure_ascii=False) for ex in examples]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_corpus(path) -> list[TrainingExample]:
    examples = []
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=number) from None
        examples.append(example_from_dict(raw, line=number))
    return examples


def validate_extras(extras, knowledge: KnowledgeBase) -> None:
    """Labeled extras must resolve before they may join the corpus."""
    for example in extras:
        if knowledge.record(example.expected_answer_id) is None:
            raise ValidationError(
                f"extra example {example.question!r} names unknown answer id "
                f"{example.expected_answer_id!r}",
                offending_id=example.expected_answer_id)
