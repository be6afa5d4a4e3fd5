"""Intent classification: first stage of the two-stage answering pipeline.

A multinomial naive-Bayes model over unigram + adjacent-bigram features with
additive smoothing. Everything is deterministic: the vocabulary is sorted,
priors come from label frequencies, and prediction confidences are posteriors
normalized over the trained intents, so training-set questions classify with
near-0/near-1 confidence and pair naturally with a high answer gate.

Tokenization: lowercase, split on non-alphanumeric runs, drop the 30 fixed
stopwords below, then emit the surviving unigrams followed by their adjacent
bigrams joined with "_".
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import EmptyCorpus, ParseError, SingleClassCorpus

logger = logging.getLogger("guideqa.classify")


class IntentCategory(Enum):
    # Declaration order is the tie-break order for equal confidences.
    DEFINITION = "definition"
    GOAL = "goal"
    GETTING_STARTED = "getting_started"
    SYSTEM_REQUIREMENTS = "system_requirements"
    HOWTO = "howto"
    DEFAULT_VALUE = "default_value"
    UNITS = "units"


_INTENT_RANK = {intent: rank for rank, intent in enumerate(IntentCategory)}

# Exactly 30 words: articles, copulas, pronouns. Interrogatives ("what",
# "how") and prepositions ("of", "for") are kept on purpose; they carry
# most of the intent signal in guide questions.
STOPWORDS = frozenset({
    "a", "an", "the",
    "am", "is", "are", "was", "were", "be", "been", "being",
    "i", "you", "he", "she", "it", "we", "they",
    "me", "him", "her", "us", "them",
    "my", "your", "his", "its", "our", "their", "that",
})

_TOKEN_RE = re.compile(r"[a-z0-9]+")

# Smoothing used by the shipped pipeline (CLI, service boot, retrain). The
# 0.97 answer gate needs near-0/near-1 posteriors; alpha=1.0 flattens short
# questions ("What is lifespan?") to ~0.7 confidence, while 0.01 gates the
# whole bundled corpus with margin. train() itself defaults to plain Laplace.
PIPELINE_ALPHA = 0.01


def tokenize(text: str) -> list[str]:
    words = [w for w in _TOKEN_RE.findall(text.lower()) if w not in STOPWORDS]
    bigrams = [f"{a}_{b}" for a, b in zip(words, words[1:])]
    return words + bigrams


def corpus_fingerprint(examples) -> str:
    """Content hash of (question, intent) pairs; invariant under ordering."""
    lines = sorted(f"{ex.question}\t{ex.intent.value}" for ex in examples)
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class IntentModel:
    vocabulary: dict[str, int]                 # token -> feature index
    class_priors: dict[IntentCategory, float]  # log priors
    token_likelihoods: dict[IntentCategory, tuple[float, ...]]  # log, by index
    smoothing_alpha: float
    fingerprint: str
    example_count: int

    @property
    def intents(self) -> tuple[IntentCategory, ...]:
        return tuple(self.class_priors)


@dataclass(frozen=True)
class Classification:
    ranked: tuple[tuple[IntentCategory, float], ...]  # descending confidence

    @property
    def top_intent(self) -> IntentCategory:
        return self.ranked[0][0]

    @property
    def top_confidence(self) -> float:
        return self.ranked[0][1]


def train(corpus, alpha: float = 1.0) -> IntentModel:
    """Fit the smoothed multinomial model. Deterministic; order-invariant."""
    if alpha <= 0:
        raise ValueError("smoothing alpha must be positive")
    examples = list(getattr(corpus, "examples", corpus))
    if not examples:
        raise EmptyCorpus("cannot train on an empty corpus")
    intents = sorted({ex.intent for ex in examples}, key=_INTENT_RANK.__getitem__)
    if len(intents) < 2:
        raise SingleClassCorpus(
            f"corpus covers only {intents[0].value!r}; at least two intents are required")

    token_counts: dict[IntentCategory, dict[str, int]] = {intent: {} for intent in intents}
    class_examples: dict[IntentCategory, int] = {intent: 0 for intent in intents}
    for ex in examples:
        class_examples[ex.intent] += 1
        counts = token_counts[ex.intent]
        for token in tokenize(ex.question):
            counts[token] = counts.get(token, 0) + 1

    vocabulary = {token: index for index, token in
                  enumerate(sorted(set().union(*token_counts.values())))}
    if not vocabulary:
        raise EmptyCorpus("corpus questions tokenize to nothing")

    total = len(examples)
    class_priors = {intent: math.log(class_examples[intent] / total) for intent in intents}
    vocab_size = len(vocabulary)
    token_likelihoods = {}
    for intent in intents:
        counts = token_counts[intent]
        class_total = sum(counts.values())
        denominator = class_total + alpha * vocab_size
        row = [0.0] * vocab_size
        for token, index in vocabulary.items():
            row[index] = math.log((counts.get(token, 0) + alpha) / denominator)
        token_likelihoods[intent] = tuple(row)

    return IntentModel(
        vocabulary=vocabulary,
        class_priors=class_priors,
        token_likelihoods=token_likelihoods,
        smoothing_alpha=alpha,
        fingerprint=corpus_fingerprint(examples),
        example_count=total,
    )


def posterior_from_features(model: IntentModel, features) -> dict[IntentCategory, float]:
    """Posterior over intents for a feature list; unknown features are skipped."""
    indices = [model.vocabulary[f] for f in features if f in model.vocabulary]
    scores = {}
    for intent in model.intents:
        row = model.token_likelihoods[intent]
        scores[intent] = model.class_priors[intent] + sum(row[i] for i in indices)
    peak = max(scores.values())
    weights = {intent: math.exp(score - peak) for intent, score in scores.items()}
    mass = sum(weights.values())
    return {intent: weight / mass for intent, weight in weights.items()}


def predict(model: IntentModel, question: str) -> Classification:
    posterior = posterior_from_features(model, tokenize(question))
    ranked = sorted(posterior.items(), key=lambda item: (-item[1], _INTENT_RANK[item[0]]))
    return Classification(ranked=tuple(ranked))


_MODEL_FORMAT = 1


def save_model(model: IntentModel, path) -> None:
    document = {
        "format": _MODEL_FORMAT,
        "alpha": model.smoothing_alpha,
        "fingerprint": model.fingerprint,
        "example_count": model.example_count,
        "vocabulary": model.vocabulary,
        "priors": {intent.value: lp for intent, lp in model.class_priors.items()},
        "likelihoods": {intent.value: list(row) for intent, row in model.token_likelihoods.items()},
    }
    Path(path).write_text(json.dumps(document, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path, expected_fingerprint: str | None = None) -> IntentModel:
    try:
        document = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid model file: {exc.msg}", line=exc.lineno, column=exc.colno) from None
    if not isinstance(document, dict) or document.get("format") != _MODEL_FORMAT:
        raise ParseError("unrecognized model file format")
    try:
        model = IntentModel(
            vocabulary={t: int(i) for t, i in document["vocabulary"].items()},
            class_priors={IntentCategory(v): float(lp) for v, lp in document["priors"].items()},
            token_likelihoods={IntentCategory(v): tuple(float(x) for x in row)
                               for v, row in document["likelihoods"].items()},
            smoothing_alpha=float(document["alpha"]),
            fingerprint=str(document["fingerprint"]),
            example_count=int(document["example_count"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"invalid model file: {exc}") from None
    if expected_fingerprint is not None and expected_fingerprint != model.fingerprint:
        logger.warning("model fingerprint %s does not match current corpus %s",
                       model.fingerprint[:12], expected_fingerprint[:12])
    return model
