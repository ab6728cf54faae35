"""Evaluation metrics and fluency gating."""

from .behavior import (
    GE_THRESHOLD,
    MIN_GRADABLE,
    UNSAFE_THRESHOLD,
    BehaviorClassifier,
    ClassifierOutput,
    GateReport,
    behavioral_shift,
    fluency_gate,
    is_gradable,
    lexicon_classifier,
)
from .text import (
    GE_WEIGHTS,
    answer_span,
    containment_accuracy,
    dist_n,
    first_word_accuracy,
    generation_entropy,
    ngram_entropy,
    words,
)

__all__ = [
    "GE_THRESHOLD",
    "GE_WEIGHTS",
    "MIN_GRADABLE",
    "UNSAFE_THRESHOLD",
    "BehaviorClassifier",
    "ClassifierOutput",
    "GateReport",
    "answer_span",
    "behavioral_shift",
    "containment_accuracy",
    "dist_n",
    "first_word_accuracy",
    "fluency_gate",
    "generation_entropy",
    "is_gradable",
    "lexicon_classifier",
    "ngram_entropy",
    "words",
]
