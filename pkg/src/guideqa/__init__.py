"""guideqa: a self-contained question-answering engine for tool User Guides.

The pipeline: a knowledge base distilled from the guide (kb), question
templates projected onto it to generate a labeled corpus (gen), a naive-Bayes
intent classifier (classify), rule-based query resolution and answer
composition (semantics), confidence-gated dialogue with IDK fallback and
feedback capture (dialogue), replay evaluation (evaluation), a REST service
(service), and an operator CLI (cli).
"""

__version__ = "0.1.0"

from .classify import IntentCategory, predict, train
from .dialogue import respond, retrain
from .evaluation import replay_labeled, replay_training
from .gen import generate_dataset, lint_question, parse_templates
from .kb import load_guide, lookup_surface

__all__ = [
    "IntentCategory",
    "__version__",
    "generate_dataset",
    "lint_question",
    "load_guide",
    "lookup_surface",
    "parse_templates",
    "predict",
    "replay_labeled",
    "replay_training",
    "respond",
    "retrain",
    "train",
]
