"""Response generation and dialogue management.

respond() runs the full answering pipeline over immutable (model, kb,
templates) snapshots: classify, gate on confidence, bind entities, execute,
naturalize. Below-threshold confidence or an unsatisfiable binding signature
routes to the IDK path, which redirects the user with 1-3 suggested topic
questions built from the highest-ranked intents' templates.

Every response is assigned a feedback id; helpfulness votes and missed
questions are persisted append-only (JSON Lines) so the retraining loop can
fold them back into the corpus.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import threading
import time
import zlib
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from . import classify, gen, semantics
from .classify import IntentCategory, IntentModel
from .errors import AlreadyVoted, EmptyQuestion, MissingEntity, UnknownFeedbackId
from .gen import QuestionTemplate, TrainingSet
from .kb import KnowledgeBase, SectionAffinity
from .semantics import AnswerPayload


class ResponseKind(Enum):
    ANSWERED = "answered"
    IDK = "idk"


class MissReason(Enum):
    BELOW_THRESHOLD = "below_threshold"
    MISSING_ENTITY = "missing_entity"


DEFAULT_THRESHOLD = 0.97

IDK_TEXT = ("I do not know the answer to that yet, "
            "but here are some topics I can help with.")

# Answer prefixes per intent, picked by question hash. Factual and section
# answers stay verbatim; how-to answers may get a light lead-in.
_PHRASE_TABLE = {
    IntentCategory.DEFINITION: ("",),
    IntentCategory.DEFAULT_VALUE: ("",),
    IntentCategory.UNITS: ("",),
    IntentCategory.GOAL: ("",),
    IntentCategory.GETTING_STARTED: ("",),
    IntentCategory.SYSTEM_REQUIREMENTS: ("",),
    IntentCategory.HOWTO: ("", "Here is the relevant guide section. ",
                           "Here is what the guide says. "),
}


@dataclass(frozen=True)
class Response:
    answer_text: str
    kind: ResponseKind
    intent: IntentCategory | None
    confidence: float
    suggestions: tuple[str, ...]
    feedback_id: str
    latency_ms: int
    source_ids: tuple[str, ...] = ()  # KB records behind an answered response


@dataclass
class FeedbackRecord:
    feedback_id: str
    question: str
    answer_text: str
    kind: ResponseKind
    helpful: str | None  # "yes" | "no" | None
    timestamp: str


@dataclass(frozen=True)
class MissedQuestion:
    question: str
    top_intent: IntentCategory
    confidence: float
    reason: MissReason
    timestamp: str


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class FeedbackStore:
    """Append-only JSON Lines persistence for feedback and missed questions.

    Writes are serialized by a lock (single-writer contract); the in-memory
    view is rebuilt from the log on open, so restarts keep vote-once
    semantics.
    """

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.feedback_path = self.data_dir / "feedback.jsonl"
        self.missed_path = self.data_dir / "missed.jsonl"
        self._lock = threading.Lock()
        self._records: dict[str, FeedbackRecord] = {}
        self._missed: list[MissedQuestion] = []
        self._sequence = 0
        self._replay()

    def _replay(self):
        if self.feedback_path.exists():
            for line in self.feedback_path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                event = json.loads(line)
                if event["type"] == "response":
                    self._records[event["feedback_id"]] = FeedbackRecord(
                        feedback_id=event["feedback_id"],
                        question=event["question"],
                        answer_text=event["answer_text"],
                        kind=ResponseKind(event["kind"]),
                        helpful=None,
                        timestamp=event["timestamp"],
                    )
                    self._sequence += 1
                elif event["type"] == "vote":
                    record = self._records.get(event["feedback_id"])
                    if record is not None:
                        record.helpful = event["helpful"]
        if self.missed_path.exists():
            for line in self.missed_path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                event = json.loads(line)
                self._missed.append(MissedQuestion(
                    question=event["question"],
                    top_intent=IntentCategory(event["top_intent"]),
                    confidence=float(event["confidence"]),
                    reason=MissReason(event["reason"]),
                    timestamp=event["timestamp"],
                ))

    def _append(self, path: Path, event: dict):
        with path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(event, ensure_ascii=False) + "\n")

    def issue(self, question: str, answer_text: str, kind: ResponseKind) -> str:
        with self._lock:
            self._sequence += 1
            digest = hashlib.sha1(f"{self._sequence}:{question}".encode("utf-8")).hexdigest()[:8]
            feedback_id = f"fb-{self._sequence:08d}-{digest}"
            record = FeedbackRecord(
                feedback_id=feedback_id, question=question, answer_text=answer_text,
                kind=kind, helpful=None, timestamp=_now(),
            )
            self._records[feedback_id] = record
            self._append(self.feedback_path, {
                "type": "response", "feedback_id": feedback_id, "question": question,
                "answer_text": answer_text, "kind": kind.value, "timestamp": record.timestamp,
            })
            return feedback_id

    def vote(self, feedback_id: str, helpful: str) -> FeedbackRecord:
        if helpful not in ("yes", "no"):
            raise ValueError(f"helpful must be 'yes' or 'no', not {helpful!r}")
        with self._lock:
            record = self._records.get(feedback_id)
            if record is None:
                raise UnknownFeedbackId(f"no response was issued with id {feedback_id!r}")
            if record.helpful is not None:
                raise AlreadyVoted(f"feedback {feedback_id!r} already has a vote")
            record.helpful = helpful
            self._append(self.feedback_path, {
                "type": "vote", "feedback_id": feedback_id, "helpful": helpful,
                "timestamp": _now(),
            })
            return record

    def log_missed(self, missed: MissedQuestion):
        with self._lock:
            self._missed.append(missed)
            self._append(self.missed_path, {
                "question": missed.question, "top_intent": missed.top_intent.value,
                "confidence": missed.confidence, "reason": missed.reason.value,
                "timestamp": missed.timestamp,
            })

    @property
    def records(self) -> dict[str, FeedbackRecord]:
        return dict(self._records)

    @property
    def missed(self) -> list[MissedQuestion]:
        return list(self._missed)


# Fallback feedback-id source when responses are not persisted (eval replays).
_ephemeral_ids = itertools.count(1)


def _ephemeral_feedback_id(question: str) -> str:
    sequence = next(_ephemeral_ids)
    digest = hashlib.sha1(f"{sequence}:{question}".encode("utf-8")).hexdigest()[:8]
    return f"tmp-{sequence:08d}-{digest}"


def naturalize(payload: AnswerPayload, question: str = "") -> str:
    """Deterministic per-intent prefix; the payload text is never altered."""
    table = _PHRASE_TABLE[payload.intent]
    prefix = table[zlib.crc32(question.encode("utf-8")) % len(table)]
    return prefix + payload.text


def representative_question(template: QuestionTemplate, knowledge: KnowledgeBase) -> str | None:
    """The template's first expansion: first alternation arms, first record
    of each slot kind (by id). None when a slot kind has no records."""
    pieces = []
    for part in template.parts:
        if isinstance(part, gen.Literal):
            pieces.append(part.text)
        elif isinstance(part, gen.Alternation):
            pieces.append(part.arms[0])
        else:
            if part.kind == "Section":
                sections = sorted(knowledge.sections_of_affinity(SectionAffinity.HOWTO),
                                  key=lambda s: s.id)
                if not sections:
                    return None
                pieces.append(sections[0].title)
            else:
                entities = sorted(knowledge.entities_of_kind(gen.SLOT_KINDS[part.kind]),
                                  key=lambda e: e.id)
                if not entities:
                    return None
                pieces.append(entities[0].name)
    return "".join(pieces)


def build_suggestions(ranked, knowledge: KnowledgeBase, templates) -> tuple[str, ...]:
    """Sample topics for the 3 highest-ranked intents: one representative
    template question each, slots filled with the first record of the kind."""
    first_template: dict[IntentCategory, QuestionTemplate] = {}
    for template in templates:
        first_template.setdefault(template.intent, template)
    suggestions = []
    for intent, _confidence in ranked:
        template = first_template.get(intent)
        if template is None:
            continue
        question = representative_question(template, knowledge)
        if question is not None:
            suggestions.append(question)
        if len(suggestions) == 3:
            break
    return tuple(suggestions)


def respond(model: IntentModel, knowledge: KnowledgeBase, templates, question: str,
            threshold: float = DEFAULT_THRESHOLD, store: FeedbackStore | None = None) -> Response:
    """Answer a question, or IDK when the gate or the binding signature fails."""
    started = time.perf_counter()
    trimmed = question.strip()
    if not trimmed:
        raise EmptyQuestion("question is empty")

    classification = classify.predict(model, trimmed)
    top_intent = classification.top_intent
    confidence = classification.top_confidence

    payload = None
    reason = None
    if confidence < threshold:
        reason = MissReason.BELOW_THRESHOLD
    else:
        bindings = semantics.extract_entities(knowledge, trimmed)
        try:
            query = semantics.build_query(top_intent, bindings, trimmed, knowledge)
            payload = semantics.execute(knowledge, query)
        except MissingEntity:
            reason = MissReason.MISSING_ENTITY

    if payload is not None:
        answer_text = naturalize(payload, trimmed)
        kind = ResponseKind.ANSWERED
        intent = payload.intent
        suggestions: tuple[str, ...] = ()
    else:
        answer_text = IDK_TEXT
        kind = ResponseKind.IDK
        intent = None
        suggestions = build_suggestions(classification.ranked, knowledge, templates)

    if store is not None:
        feedback_id = store.issue(trimmed, answer_text, kind)
        if kind is ResponseKind.IDK:
            store.log_missed(MissedQuestion(
                question=trimmed, top_intent=top_intent, confidence=confidence,
                reason=reason, timestamp=_now(),
            ))
    else:
        feedback_id = _ephemeral_feedback_id(trimmed)

    latency_ms = int((time.perf_counter() - started) * 1000)
    return Response(
        answer_text=answer_text, kind=kind, intent=intent, confidence=confidence,
        suggestions=suggestions, feedback_id=feedback_id, latency_ms=latency_ms,
        source_ids=payload.source_ids if payload is not None else (),
    )


def record_feedback(store: FeedbackStore, feedback_id: str, helpful: str) -> FeedbackRecord:
    """Record one helpfulness vote; later votes for the same id are rejected."""
    return store.vote(feedback_id, helpful)


def retrain(knowledge: KnowledgeBase, templates, extra_labeled=(), alpha: float = 1.0) -> IntentModel:
    """Regenerate the corpus, fold in labeled extras, train a fresh model.

    The caller owns the atomic swap; in-flight readers keep the old model.
    """
    extras = list(extra_labeled)
    gen.validate_extras(extras, knowledge)
    corpus = gen.generate_dataset(templates, knowledge)
    seen = {example.question for example in corpus.examples}
    merged = list(corpus.examples)
    for example in extras:
        if example.question in seen:
            continue
        seen.add(example.question)
        merged.append(example)
    return classify.train(TrainingSet.from_examples(merged), alpha=alpha)
