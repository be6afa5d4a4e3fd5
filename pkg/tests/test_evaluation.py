import json
import random

import pytest

from guideqa.classify import IntentCategory
from guideqa.errors import ParseError
from guideqa.evaluation import EvalReport, read_labeled, replay_labeled, replay_training


def test_training_replay_is_fully_correct(model, knowledge, corpus, templates):
    report = replay_training(model, knowledge, corpus, threshold=0.97, templates=templates)
    assert report.total == len(corpus.examples)
    assert report.semantically_correct == report.total
    assert report.splits == (report.total, 0, 0)


def test_training_replay_confusion_is_diagonal(model, knowledge, corpus, templates):
    report = replay_training(model, knowledge, corpus, threshold=0.97, templates=templates)
    for true_intent, row in report.confusion.items():
        for predicted, count in row.items():
            if true_intent is not predicted:
                assert count == 0


def test_replay_invariants_hold(model, knowledge, corpus, templates):
    report = replay_training(model, knowledge, corpus, threshold=0.97, templates=templates)
    answered_correct, answered_wrong, idk = report.splits
    assert answered_correct + answered_wrong + idk == report.total
    for intent, (total, _correct) in report.per_intent.items():
        assert sum(report.confusion[intent].values()) == total


def test_empty_corpus_reports_zeros(model, knowledge):
    report = replay_training(model, knowledge, [], threshold=0.97)
    assert report.total == 0
    assert report.splits == (0, 0, 0)
    assert report.semantically_correct == 0


def test_impossible_threshold_closes_the_gate(model, knowledge, corpus):
    sample = corpus.examples[:25]
    report = replay_training(model, knowledge, sample, threshold=1.01)
    assert report.splits == (0, 0, len(sample))


def test_threshold_zero_answers_at_least_as_much(model, knowledge, corpus):
    sample = corpus.examples[:60]
    deployed = replay_training(model, knowledge, sample, threshold=0.97)
    open_gate = replay_training(model, knowledge, sample, threshold=0.0)
    assert open_gate.splits[0] >= deployed.splits[0]


def test_labeled_fixture_matches_field_study_shape(model, knowledge, fixture_path, templates):
    report = replay_labeled(model, knowledge, fixture_path("labeled_31.jsonl"),
                            threshold=0.97, templates=templates)
    assert report.total == 31
    assert report.splits == (19, 0, 12)
    assert report.semantically_correct == 31  # every outcome matched its expectation


def test_labeled_dedup_counts_unique_questions(model, knowledge, tmp_path):
    path = tmp_path / "dupes.jsonl"
    line = json.dumps({"question": "What is the goal of VERA?", "expected_answer_id": "goal"})
    path.write_text("\n".join([line, line, line]) + "\n", encoding="utf-8")
    report = replay_labeled(model, knowledge, path)
    assert report.total == 1
    assert report.splits == (1, 0, 0)


def test_expected_idk_that_gets_answered_is_wrong(model, knowledge, tmp_path):
    path = tmp_path / "one.jsonl"
    path.write_text(json.dumps({"question": "What is the goal of VERA?"}) + "\n",
                    encoding="utf-8")
    report = replay_labeled(model, knowledge, path)
    assert report.splits == (0, 1, 0)
    assert report.semantically_correct == 0


def test_scoring_is_order_independent(model, knowledge, fixture_path, tmp_path):
    lines = fixture_path("labeled_31.jsonl").read_text().splitlines()
    shuffled = lines[:]
    random.Random(3).shuffle(shuffled)
    path = tmp_path / "shuffled.jsonl"
    path.write_text("\n".join(shuffled) + "\n", encoding="utf-8")
    original = replay_labeled(model, knowledge, fixture_path("labeled_31.jsonl"))
    reordered = replay_labeled(model, knowledge, path)
    assert original.splits == reordered.splits
    assert original.semantically_correct == reordered.semantically_correct


def test_labeled_file_validation(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text("oops\n", encoding="utf-8")
    with pytest.raises(ParseError) as err:
        read_labeled(path)
    assert err.value.line == 1
    path.write_text('{"question": "x?", "surprise": 1}\n', encoding="utf-8")
    with pytest.raises(ParseError):
        read_labeled(path)
    path.write_text('{"expected_answer_id": "goal"}\n', encoding="utf-8")
    with pytest.raises(ParseError):
        read_labeled(path)


def test_report_rendering(model, knowledge, corpus, templates):
    report = replay_training(model, knowledge, corpus.examples[:40], threshold=0.97,
                             templates=templates)
    table = report.render_table()
    assert "intent" in table and "splits:" in table
    document = report.to_dict()
    assert document["total"] == 40
    assert set(document["splits"]) == {"answered_correct", "answered_wrong", "idk"}
    assert isinstance(EvalReport(), EvalReport)
    for intent in document["per_intent"]:
        IntentCategory(intent)  # keys are wire names
