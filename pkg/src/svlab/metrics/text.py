"""Text metrics: answer accuracy, n-gram entropy, distinct-n."""

from __future__ import annotations

import math
import re
import string
from collections import Counter

from ..errors import InputError

PUNCT = string.punctuation
GE_WEIGHTS = (0.5, 0.5)
_WORD = r"[\w'\-]"


def words(text: str) -> list[str]:
    """Whitespace tokens with surrounding punctuation stripped; empties dropped."""
    out = []
    for t in text.split():
        t = t.strip(PUNCT)
        if t:
            out.append(t)
    return out


def _first_word(text: str) -> str:
    parts = text.strip().split(maxsplit=1)
    return parts[0].rstrip(PUNCT) if parts else ""


def first_word_accuracy(generation: str, label: str) -> bool:
    """Case-sensitive match of the first word of ``generation`` and ``label``."""
    if not label.strip():
        raise InputError("label must be non-empty")
    g = _first_word(generation)
    return bool(g) and g == _first_word(label)


def containment_accuracy(generation: str, label: str) -> bool:
    """``label`` occurs in ``generation`` as a whole word (case-sensitive)."""
    if not label.strip():
        raise InputError("label must be non-empty")
    pattern = rf"(?<!{_WORD}){re.escape(label.strip())}(?!{_WORD})"
    return re.search(pattern, generation) is not None


def _check_n(n: int, allowed: tuple) -> None:
    if n not in allowed:
        raise InputError(f"n must be one of {allowed}, got {n}")


def _ngrams(tokens: list, n: int) -> list:
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def ngram_entropy(text: str, n: int) -> float:
    """Base-2 Shannon entropy of the empirical n-gram distribution."""
    _check_n(n, (2, 3))
    grams = _ngrams(words(text), n)
    if not grams:
        return 0.0
    total = len(grams)
    h = 0.0
    for c in sorted(Counter(grams).values()):
        p = c / total
        h -= p * math.log2(p)
    return h + 0.0  # normalizes -0.0


def generation_entropy(text: str, weights: tuple = GE_WEIGHTS) -> float:
    """Weighted bigram and trigram entropy (GE)."""
    w2, w3 = weights
    return w2 * ngram_entropy(text, 2) + w3 * ngram_entropy(text, 3)


def dist_n(text: str, n: int) -> float:
    """Percentage of distinct n-grams among all n-grams."""
    _check_n(n, (1, 2))
    grams = _ngrams(words(text), n)
    if not grams:
        return 0.0
    return 100.0 * len(set(grams)) / len(grams)


def answer_span(generation: str) -> str:
    """The generated answer up to the model's next ``Q:`` line, if any.

    The toy model keeps emitting new question blocks after answering; those
    invented questions are not part of the answer being classified.
    """
    m = re.search(r"(^|\s)Q:", generation)
    return generation[: m.start()] if m else generation
