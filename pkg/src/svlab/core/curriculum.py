"""Synthetic pre-training corpus for the toy model.

Every document is a run of ``Q: x\\n A: y`` blocks drawn from one task, so
each answer position is a k-shot in-context example for k = 0, 1, 2, ...
Word documents mix the four functional tasks with two distractors over
the same inputs: ``echo`` (answer = input) and ``shuffled`` documents, whose
answers are another pair's answer from one functional task. Sentence
documents mix the two behavioral tasks with a sentence echo. Inputs are
shared across tasks, so the task is only identifiable from the
demonstrations. Shuffled documents share each task's answer vocabulary but
not its mapping, so the model has to read the input-answer relation, not
just the answer vocabulary, to tell which task it is in.

The corpus covers every pair of every task: the model's in-weights
knowledge plays the role of a pretrained model's. Train/test splits only
separate demonstration data from evaluation queries downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from ..tasks.datasets import BEHAVIORAL, FUNCTIONAL, builtin_task, load_fillers, load_templates
from .tokenizer import Tokenizer

WORD_TASKS = FUNCTIONAL + ("echo",)
SENTENCE_TASKS = BEHAVIORAL + ("echo_sentence",)


def _task_pairs() -> dict:
    pairs = {name: list(builtin_task(name).pairs) for name in FUNCTIONAL + BEHAVIORAL}
    words = sorted({a for t in FUNCTIONAL for a, _ in pairs[t]})
    pairs["echo"] = [(w, w) for w in words]
    sentences = sorted({a for t in BEHAVIORAL for a, _ in pairs[t]})
    pairs["echo_sentence"] = [(s, s) for s in sentences]
    return pairs


@lru_cache(maxsize=1)
def default_tokenizer() -> Tokenizer:
    texts = []
    for name in FUNCTIONAL + BEHAVIORAL:
        for a, b in builtin_task(name).pairs:
            texts += [a, b]
    texts += list(load_fillers())
    for temps in load_templates().values():
        texts += [t.replace("{q}", "") for t in temps]
    return Tokenizer.from_texts(texts)


@dataclass
class Curriculum:
    documents: list
    kinds: list
    tokenizer: Tokenizer
    seed: int

    def __len__(self) -> int:
        return len(self.documents)

    def to_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for doc, kind in zip(self.documents, self.kinds):
                fh.write(json.dumps({"task": kind, "text": doc}) + "\n")

    @classmethod
    def from_jsonl(cls, path: str | Path, tokenizer: Tokenizer | None = None) -> "Curriculum":
        docs, kinds = [], []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    docs.append(rec["text"])
                    kinds.append(rec.get("task", "unknown"))
        return cls(docs, kinds, tokenizer or default_tokenizer(), -1)


def _document(pairs: list, n_blocks: int, rng: np.random.Generator) -> str:
    idx = rng.choice(len(pairs), size=min(n_blocks, len(pairs)), replace=False)
    return "".join(f"Q: {pairs[i][0]}\n A: {pairs[i][1]}\n\n" for i in idx)


def _shuffled_document(pairs: list, n_blocks: int, rng: np.random.Generator) -> str:
    """Inputs from ``pairs`` with answers taken from other, disjoint pairs."""
    n = min(n_blocks, len(pairs) // 2)
    idx = rng.choice(len(pairs), size=2 * n, replace=False)
    return "".join(f"Q: {pairs[i][0]}\n A: {pairs[j][1]}\n\n" for i, j in zip(idx[:n], idx[n:]))


def build_curriculum(
    n_docs: int = 40_000,
    seed: int = 0,
    word_blocks: int = 11,
    sentence_blocks: int = 6,
    sentence_fraction: float = 0.3,
    shuffled_fraction: float = 0.15,
    sentence_echo_fraction: float = 0.6,
) -> Curriculum:
    """Sample ``n_docs`` documents. Deterministic for a given seed.

    ``shuffled_fraction`` is the share of word documents that are shuffled
    distractors; the rest are split evenly over the functional tasks and
    ``echo``. ``sentence_echo_fraction`` is the share of sentence documents
    that echo their input; the rest are split over the behavioral tasks.
    """
    fractions = (("sentence_fraction", sentence_fraction), ("shuffled_fraction", shuffled_fraction),
                 ("sentence_echo_fraction", sentence_echo_fraction))
    for name, frac in fractions:
        if not 0.0 <= frac < 1.0:
            raise ConfigurationError(f"{name} must lie in [0, 1), got {frac}")
    rng = np.random.default_rng(seed)
    pairs = _task_pairs()
    docs, kinds = [], []
    for _ in range(n_docs):
        if rng.random() < sentence_fraction:
            if rng.random() < sentence_echo_fraction:
                task = "echo_sentence"
            else:
                task = BEHAVIORAL[int(rng.integers(len(BEHAVIORAL)))]
            docs.append(_document(pairs[task], sentence_blocks, rng))
        else:
            if rng.random() < shuffled_fraction:
                task = "shuffled"
                source = FUNCTIONAL[int(rng.integers(len(FUNCTIONAL)))]
                docs.append(_shuffled_document(pairs[source], word_blocks, rng))
            else:
                task = WORD_TASKS[int(rng.integers(len(WORD_TASKS)))]
                docs.append(_document(pairs[task], word_blocks, rng))
        kinds.append(task)
    return Curriculum(docs, kinds, default_tokenizer(), seed)
