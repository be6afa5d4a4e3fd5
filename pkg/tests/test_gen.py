import json
import random

import pytest

from guideqa import semantics
from guideqa.classify import IntentCategory
from guideqa.errors import EmptyCorpus, ParseError, TemplateSyntaxError, ValidationError
from guideqa.gen import (
    ARTICLE_DISAGREEMENT,
    DOUBLE_SPACE,
    MISSING_QUESTION_MARK,
    NON_INTERROGATIVE_START,
    RESIDUAL_PLACEHOLDER,
    Alternation,
    Slot,
    TrainingSet,
    example_from_dict,
    expand,
    generate_dataset,
    lint_question,
    parse_templates,
    read_corpus,
    template_from_dict,
    write_corpus,
)
from helpers import entity, section, small_kb


def template(pattern, intent="definition", rule="definition", tid="t1", **extra):
    raw = {"id": tid, "intent": intent, "pattern": pattern, "answer_rule": rule}
    raw.update(extra)
    return template_from_dict(raw)


def write_templates(tmp_path, raw):
    path = tmp_path / "templates.json"
    path.write_text(json.dumps(raw), encoding="utf-8")
    return path


# --------------------------------------------------------------------------
# parsing

def test_parse_figure_default_value_template(tmp_path):
    path = write_templates(tmp_path, [{
        "id": "dv", "intent": "default_value",
        "pattern": "What is the default value of {p:Parameter}?",
        "answer_rule": "default_value"}])
    parsed = parse_templates(path)
    assert len(parsed) == 1
    assert parsed[0].intent is IntentCategory.DEFAULT_VALUE
    assert parsed[0].slots == {"p": "Parameter"}
    assert parsed[0].answer_slot == "p"


def test_unknown_kind_rejected_with_offset():
    with pytest.raises(TemplateSyntaxError) as err:
        template("What is {x:Bogus}?")
    assert "Bogus" in str(err.value)
    assert err.value.offset == 8
    assert err.value.template_id == "t1"


def test_alternation_group_parses():
    t = template("(What|Which) units does {p:Parameter} use?",
                 intent="units", rule="units")
    groups = [p for p in t.parts if isinstance(p, Alternation)]
    assert len(groups) == 1
    assert groups[0].arms == ("What", "Which")


def test_bad_patterns_rejected():
    bad = [
        "What is {p:Parameter?",        # unbalanced brace
        "What is p:Parameter}?",        # stray close brace
        "(What|Which units?",           # unbalanced paren
        "What|Which units?",            # separator outside group
        "(What|) units?",               # empty arm
        "()",                           # empty arm
        "(a(b|c)) x?",                  # nested group
        "({p:Parameter}|b) x?",         # slot inside group
        "What {a:Term} {b:Term} {c:Term}?",  # more than 2 slots
        "What {a:Term} and {a:Term}?",  # duplicate slot name
        "What is {noColon}?",           # missing KIND separator
    ]
    for pattern in bad:
        with pytest.raises(TemplateSyntaxError):
            template(pattern)


def test_rule_and_intent_must_agree():
    with pytest.raises(ParseError):
        template("What is {t:Term}?", intent="goal", rule="definition", tid="bad")


def test_rule_needs_matching_slot_kind():
    with pytest.raises(TemplateSyntaxError):
        template("How do I {s:Section}?", intent="default_value", rule="default_value")
    with pytest.raises(TemplateSyntaxError):
        template("What is the goal?", intent="goal", rule="goal_text", answer_slot="x")


def test_answer_slot_picks_between_two_slots():
    t = template("What is the default {p:Parameter} for {c:Component}s?",
                 intent="default_value", rule="default_value")
    assert t.answer_slot == "p"


def test_duplicate_template_ids_rejected(tmp_path):
    raw = [{"id": "a", "intent": "goal", "pattern": "What is the goal?",
            "answer_rule": "goal_text"}] * 2
    with pytest.raises(ParseError):
        parse_templates(write_templates(tmp_path, raw))


# --------------------------------------------------------------------------
# expansion

def test_expand_is_arm_times_entity_product():
    kb = small_kb(n_params=3)
    t = template("(What|Which) units does {p:Parameter} use?", intent="units", rule="units")
    examples = expand(t, kb)
    assert len(examples) == 6
    assert examples[0].question == "What units does param 0 use?"
    assert [e.question for e in examples] == sorted(set(e.question for e in examples), key=[e.question for e in examples].index)


def test_expand_zero_slot_template_yields_one():
    kb = small_kb()
    t = template("What is the goal of VERA?", intent="goal", rule="goal_text")
    examples = expand(t, kb)
    assert len(examples) == 1
    assert examples[0].expected_answer_id == "goal"
    assert examples[0].bindings == ()


def test_expand_empty_when_kind_absent():
    kb = small_kb(n_params=0)
    t = template("What does {p:Parameter} default to?", intent="default_value",
                 rule="default_value")
    assert expand(t, kb) == []


def test_expand_section_slot_uses_titles():
    kb = small_kb(n_howto=2)
    t = template("How do I {s:Section}?", intent="howto", rule="section_body")
    examples = expand(t, kb)
    assert [e.question for e in examples] == ["How do I howto 0?", "How do I howto 1?"]
    assert examples[0].expected_answer_id == "howto_0"


def test_figure_default_value_expansion(knowledge, templates):
    questions = {e.question: e for t in templates for e in expand(t, knowledge)}
    ex = questions["What is the default value of photosynthesis rate?"]
    assert ex.intent is IntentCategory.DEFAULT_VALUE
    query = semantics.build_query(ex.intent, {"parameter": ex.expected_answer_id}, ex.question)
    assert semantics.execute(knowledge, query).text == "photosynthesis rate: 0 kg/s"


def test_expansion_count_law_randomized():
    rng = random.Random(20240817)
    kinds = ["Term", "Parameter", "Component", "Relationship", "Section"]
    intents = {
        "Term": ("definition", "definition"),
        "Parameter": ("default_value", "default_value"),
        "Section": ("howto", "section_body"),
    }
    for case in range(50):
        counts = {kind: rng.randint(0, 5) for kind in kinds}
        kb = small_kb(n_terms=counts["Term"], n_params=counts["Parameter"],
                      n_components=counts["Component"], n_relationships=counts["Relationship"],
                      n_howto=counts["Section"])
        arms = [rng.randint(1, 4) for _ in range(rng.randint(0, 2))]
        slot_kind = rng.choice(["Term", "Parameter", "Section"])
        intent, rule = intents[slot_kind]
        pattern = "What"
        for i, n in enumerate(arms):
            pattern += " (" + "|".join(f"arm{i}{j}" for j in range(n)) + ")"
        pattern += f" {{x:{slot_kind}}}?"
        t = template(pattern, intent=intent, rule=rule, tid=f"case{case}")
        expected = counts[slot_kind]
        for n in arms:
            expected *= n
        assert len(expand(t, kb)) == expected, pattern


# --------------------------------------------------------------------------
# linter

def test_lint_clean_figure_question():
    assert lint_question("What is the default value of photosynthesis rate?") == []


def test_lint_residual_placeholder():
    assert lint_question("What is a {p:Parameter}?") == [RESIDUAL_PLACEHOLDER]


def test_lint_article_disagreement_only():
    assert lint_question("What is a abiotic substance?") == [ARTICLE_DISAGREEMENT]
    assert lint_question("Is that an biotic substance?") == [ARTICLE_DISAGREEMENT]


def test_lint_missing_question_mark():
    assert lint_question("What is a cat") == [MISSING_QUESTION_MARK]


def test_lint_double_space():
    assert lint_question("What is  a cat?") == [DOUBLE_SPACE]


def test_lint_non_interrogative_start():
    assert lint_question("Tell me about cats?") == [NON_INTERROGATIVE_START]
    assert lint_question("") == [MISSING_QUESTION_MARK, NON_INTERROGATIVE_START]


# --------------------------------------------------------------------------
# dataset generation

def test_generate_dataset_covers_all_intents(corpus, templates, knowledge):
    assert len(corpus.examples) >= 500
    assert set(corpus.per_intent_counts) == set(IntentCategory)
    assert sum(corpus.per_intent_counts.values()) == len(corpus.examples)
    # pre-dedup total equals the analytic expansion sum
    assert sum(len(expand(t, knowledge)) for t in templates) >= len(corpus.examples)


def test_generated_questions_fully_substituted(corpus):
    for ex in corpus.examples:
        assert not any(ch in ex.question for ch in "{}(|)"), ex.question


def test_duplicate_question_keeps_first_template():
    kb = small_kb(n_terms=1)
    t1 = template("What is {t:Term}?", tid="first")
    t2 = template("What is {x:Term}?", tid="second")
    out = generate_dataset([t1, t2], kb)
    assert len(out.examples) == 1
    assert out.examples[0].template_id == "first"


def test_missing_kind_contributes_nothing_without_error():
    kb = small_kb(n_terms=1, n_relationships=0)
    t1 = template("What is {t:Term}?", tid="terms")
    t2 = template("What does {r:Relationship} mean?", tid="rels")
    out = generate_dataset([t1, t2], kb)
    assert {e.template_id for e in out.examples} == {"terms"}


def test_generate_dataset_empty_corpus_raises():
    kb = small_kb(n_terms=0)
    with pytest.raises(EmptyCorpus):
        generate_dataset([template("What is {t:Term}?")], kb)


def test_generation_deterministic_bytes(templates, knowledge, tmp_path):
    out1, out2 = tmp_path / "c1.jsonl", tmp_path / "c2.jsonl"
    write_corpus(generate_dataset(templates, knowledge).examples, out1)
    write_corpus(generate_dataset(templates, knowledge).examples, out2)
    assert out1.read_bytes() == out2.read_bytes()


def test_corpus_round_trip(corpus, tmp_path):
    path = tmp_path / "corpus.jsonl"
    write_corpus(corpus.examples, path)
    assert read_corpus(path) == corpus.examples


def test_corpus_record_validation(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"question": "What is x?", "intent": "definition"}\n', encoding="utf-8")
    with pytest.raises(ParseError):
        read_corpus(path)
    path.write_text('{"question": "What is {t:Term}?", "intent": "definition", '
                    '"expected_answer_id": "x"}\n', encoding="utf-8")
    with pytest.raises(ParseError):
        read_corpus(path)
    path.write_text("not json\n", encoding="utf-8")
    with pytest.raises(ParseError) as err:
        read_corpus(path)
    assert err.value.line == 1


def test_training_set_counts_sum():
    kb = small_kb(n_terms=2)
    out = generate_dataset([template("What is {t:Term}?")], kb)
    assert out.per_intent_counts == {IntentCategory.DEFINITION: 2}
    rebuilt = TrainingSet.from_examples(out.examples)
    assert rebuilt.per_intent_counts == out.per_intent_counts


def test_every_intent_with_template_and_entities_is_covered(corpus, templates):
    intents_with_templates = {t.intent for t in templates}
    for intent in intents_with_templates:
        assert corpus.per_intent_counts.get(intent, 0) >= 1


def test_bundled_corpus_lints_clean(corpus):
    assert corpus.lint_report == []


def test_extras_validation_names_missing_id(knowledge):
    from guideqa.gen import validate_extras
    bad = example_from_dict({"question": "What is zzz?", "intent": "definition",
                             "expected_answer_id": "ghost_record"})
    with pytest.raises(ValidationError) as err:
        validate_extras([bad], knowledge)
    assert "ghost_record" in str(err.value)
