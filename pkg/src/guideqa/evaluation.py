"""Replay harnesses: score the deployed pipeline against labeled questions.

Two replays share one report shape:

* replay_training runs every generated training example through the full
  respond pipeline; an example is semantically correct iff the response is
  Answered and its source ids include the example's expected answer id.
* replay_labeled scores a JSON Lines file of user questions
  ({"question": ..., "expected_answer_id": ...}; a missing id means the
  expected outcome is IDK). Questions are deduplicated before scoring.

Splits partition responses into (answered_correct, answered_wrong, idk);
semantically_correct counts records whose outcome matched the expectation
(for training replay that equals answered_correct). The confusion matrix is
true-intent x predicted-intent for the training replay; labeled records have
no gold intent, so there it degenerates to the predicted diagonal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import classify, dialogue, gen
from .classify import IntentCategory, IntentModel
from .errors import ParseError
from .kb import KnowledgeBase

INTENTS = tuple(IntentCategory)


@dataclass
class EvalReport:
    total: int = 0
    semantically_correct: int = 0
    syntactically_correct: int = 0
    per_intent: dict[IntentCategory, tuple[int, int]] = field(default_factory=dict)
    splits: tuple[int, int, int] = (0, 0, 0)  # answered_correct, answered_wrong, idk
    confusion: dict[IntentCategory, dict[IntentCategory, int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        answered_correct, answered_wrong, idk = self.splits
        return {
            "total": self.total,
            "semantically_correct": self.semantically_correct,
            "syntactically_correct": self.syntactically_correct,
            "per_intent": {intent.value: {"total": t, "correct": c}
                           for intent, (t, c) in sorted(self.per_intent.items(),
                                                        key=lambda kv: kv[0].value)},
            "splits": {"answered_correct": answered_correct,
                       "answered_wrong": answered_wrong, "idk": idk},
            "confusion": {true.value: {pred.value: n for pred, n in row.items() if n}
                          for true, row in self.confusion.items() if any(row.values())},
        }

    def render_table(self) -> str:
        lines = [f"{'intent':<22}{'total':>8}{'correct':>9}"]
        for intent in INTENTS:
            if intent not in self.per_intent:
                continue
            total, correct = self.per_intent[intent]
            lines.append(f"{intent.value:<22}{total:>8}{correct:>9}")
        lines.append(f"{'total':<22}{self.total:>8}{self.semantically_correct:>9}")
        answered_correct, answered_wrong, idk = self.splits
        lines.append("")
        lines.append(f"splits: answered_correct={answered_correct} "
                     f"answered_wrong={answered_wrong} idk={idk}")
        if self.total:
            lines.append(f"semantic correctness:  {self.semantically_correct}/{self.total} "
                         f"({100.0 * self.semantically_correct / self.total:.1f}%)")
            lines.append(f"syntactic correctness: {self.syntactically_correct}/{self.total} "
                         f"({100.0 * self.syntactically_correct / self.total:.1f}%)")
        return "\n".join(lines)


def _empty_confusion():
    return {true: {pred: 0 for pred in INTENTS} for true in INTENTS}


def _score(records, model: IntentModel, knowledge: KnowledgeBase, threshold, templates,
           gold_intent_of=None) -> EvalReport:
    """records: iterable of (question, expected_answer_id_or_None)."""
    report = EvalReport(confusion=_empty_confusion())
    per_intent: dict[IntentCategory, list[int]] = {}
    answered_correct = answered_wrong = idk = 0

    for index, (question, expected_id) in enumerate(records):
        prediction = classify.predict(model, question)
        response = dialogue.respond(model, knowledge, templates, question, threshold=threshold)
        if response.kind is dialogue.ResponseKind.ANSWERED:
            correct = expected_id is not None and expected_id in response.source_ids
            if correct:
                answered_correct += 1
            else:
                answered_wrong += 1
            matched = correct
        else:
            idk += 1
            matched = expected_id is None

        report.total += 1
        if matched:
            report.semantically_correct += 1
        if not gen.lint_question(question):
            report.syntactically_correct += 1

        true_intent = gold_intent_of(index) if gold_intent_of else prediction.top_intent
        report.confusion[true_intent][prediction.top_intent] += 1
        bucket = per_intent.setdefault(true_intent, [0, 0])
        bucket[0] += 1
        bucket[1] += int(matched)

    report.per_intent = {intent: tuple(counts) for intent, counts in per_intent.items()}
    report.splits = (answered_correct, answered_wrong, idk)
    return report


def replay_training(model: IntentModel, knowledge: KnowledgeBase, corpus,
                    threshold: float = dialogue.DEFAULT_THRESHOLD, templates=()) -> EvalReport:
    examples = list(getattr(corpus, "examples", corpus))
    records = [(ex.question, ex.expected_answer_id) for ex in examples]
    return _score(records, model, knowledge, threshold, templates,
                  gold_intent_of=lambda i: examples[i].intent)


def read_labeled(path) -> list[tuple[str, str | None]]:
    """Parse a labeled-question file; absent expected_answer_id means IDK."""
    records = []
    for number, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=number) from None
        if not isinstance(raw, dict):
            raise ParseError("labeled record must be an object", line=number)
        unknown = set(raw) - {"question", "expected_answer_id"}
        if unknown:
            raise ParseError(f"labeled record has unknown keys {sorted(unknown)}", line=number)
        question = raw.get("question")
        if not isinstance(question, str) or not question.strip():
            raise ParseError("labeled record missing 'question'", line=number)
        expected = raw.get("expected_answer_id")
        if expected is not None and not isinstance(expected, str):
            raise ParseError("expected_answer_id must be a string", line=number)
        records.append((question, expected))
    return records


def replay_labeled(model: IntentModel, knowledge: KnowledgeBase, path,
                   threshold: float = dialogue.DEFAULT_THRESHOLD, templates=()) -> EvalReport:
    records = read_labeled(path)
    seen: set[str] = set()
    unique = []
    for question, expected in records:
        if question in seen:
            continue
        seen.add(question)
        unique.append((question, expected))
    return _score(unique, model, knowledge, threshold, templates)
