"""Prompt builders. All functions are pure and byte-exact."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError, InputError
from .datasets import SLOT, TaskSpec, load_fillers

PROMPT_KINDS = ("zero_shot", "few_shot", "shuffled_few_shot", "natural")
DEMO_KINDS = ("style1", "style2", "behavioral_raw")


@dataclass(frozen=True)
class PromptStyle:
    kind: str = "zero_shot"
    n_shots: int = 0
    template_index: int = 0

    def __post_init__(self):
        if self.kind not in PROMPT_KINDS:
            raise ConfigurationError(f"unknown prompt kind {self.kind!r}")
        if self.kind in ("few_shot", "shuffled_few_shot") and self.n_shots < 1:
            raise ConfigurationError(f"{self.kind} needs n_shots >= 1")
        if self.kind == "zero_shot" and self.n_shots != 0:
            raise ConfigurationError("zero_shot prompts have n_shots == 0")

    @property
    def label(self) -> str:
        if self.kind in ("few_shot", "shuffled_few_shot"):
            return f"{self.kind}_{self.n_shots}"
        if self.kind == "natural":
            return f"natural_{self.template_index}"
        return self.kind

    @classmethod
    def parse(cls, label: str) -> "PromptStyle":
        """Inverse of :attr:`label`, e.g. ``"shuffled_few_shot_3"``."""
        head, _, tail = label.rpartition("_")
        if tail.isdigit() and head in ("few_shot", "shuffled_few_shot"):
            return cls(head, int(tail))
        if tail.isdigit() and head == "natural":
            return cls("natural", 0, int(tail))
        return cls(label)


@dataclass(frozen=True)
class DemoStyle:
    kind: str = "style2"
    filler_source: tuple = ()

    def __post_init__(self):
        if self.kind not in DEMO_KINDS:
            raise ConfigurationError(f"unknown demo style {self.kind!r}")
        for f in self.filler_source:
            if not 1 <= len(f.split()) <= 5:
                raise ConfigurationError(f"filler {f!r} must be 1-5 words")

    @classmethod
    def default(cls, kind: str = "style2") -> "DemoStyle":
        return cls(kind, load_fillers())


@dataclass(frozen=True)
class ContrastPair:
    negative: str
    positive: str

    def __post_init__(self):
        if not self.negative or not self.positive:
            raise InputError("contrast pair members must be non-empty")


def build_zero_shot(query: str) -> str:
    """``"Q: {query}\\nA:"``. Newlines inside ``query`` pass through verbatim."""
    if not query:
        raise InputError("query must be non-empty")
    return f"Q: {query}\nA:"


def build_few_shot(demos: Sequence[tuple], query: str) -> str:
    """Demo blocks ``"Q: {x}\\n A: {y}\\n\\n"`` followed by the zero-shot query.

    The space before ``A:`` in demo blocks (and its absence in the query
    block) is intentional.
    """
    if len(demos) < 1:
        raise InputError("few-shot prompts need at least one demonstration")
    return "".join(f"Q: {x}\n A: {y}\n\n" for x, y in demos) + build_zero_shot(query)


def shuffle_labels(demos: Sequence[tuple], rng: np.random.Generator) -> list:
    """Permute outputs across demos, redrawing any draw that reproduces the input pairing.

    Individual demos may keep their own label; only the pairing as a whole
    is guaranteed to change. Duplicate labels are handled by comparing
    pairings rather than permutations.
    """
    n = len(demos)
    if n < 2:
        raise InputError("shuffling labels needs at least two demonstrations")
    labels = [b for _, b in demos]
    if len(set(labels)) < 2:
        raise InputError("all demonstrations share one label; no shuffle can change the pairing")
    original = [tuple(d) for d in demos]
    while True:
        perm = rng.permutation(n)
        out = [(demos[i][0], labels[j]) for i, j in zip(range(n), perm)]
        if out != original:
            return out


def build_natural(template_index: int, task: TaskSpec, query: str) -> str:
    templates = task.natural_templates
    if not 0 <= template_index < len(templates):
        raise ConfigurationError(
            f"task {task.name!r} has no natural-text template #{template_index} ({len(templates)} available)"
        )
    return templates[template_index].replace(SLOT, query)


def build_prompt(
    style: PromptStyle,
    task: TaskSpec,
    query: str,
    demos: Sequence[tuple] = (),
    rng: np.random.Generator | None = None,
) -> str:
    if style.kind == "zero_shot":
        return build_zero_shot(query)
    if style.kind == "natural":
        return build_natural(style.template_index, task, query)
    demos = list(demos)[: style.n_shots]
    if len(demos) < style.n_shots:
        raise InputError(f"{style.label} needs {style.n_shots} demos, got {len(demos)}")
    if style.kind == "shuffled_few_shot":
        demos = shuffle_labels(demos, rng if rng is not None else np.random.default_rng(0))
    return build_few_shot(demos, query)


def make_contrast_pairs(task: TaskSpec, style: DemoStyle, k: int, rng: np.random.Generator) -> list:
    """Sample ``k`` (negative, positive) demonstration pairs from the train split.

    * ``style2``: ``("Q: {a}\\nA: {c}", "Q: {a}\\nA: {b}")`` with ``c`` an
      uninformative filler string.
    * ``style1`` / ``behavioral_raw``: the raw pair ``(a, b)``.
    """
    if k < 1:
        raise InputError("k must be >= 1")
    train = task.train
    if len(train) < k:
        raise InputError(f"task {task.name!r} train split has {len(train)} pairs, need {k}")
    if style.kind == "style2" and not style.filler_source:
        raise InputError("style2 demonstrations need filler strings")
    idx = rng.choice(len(train), size=k, replace=False)
    pairs = []
    for i in idx:
        a, b = train[int(i)]
        if style.kind == "style2":
            c = style.filler_source[int(rng.integers(len(style.filler_source)))]
            pairs.append(ContrastPair(f"Q: {a}\nA: {c}", f"Q: {a}\nA: {b}"))
        else:
            pairs.append(ContrastPair(a, b))
    return pairs
