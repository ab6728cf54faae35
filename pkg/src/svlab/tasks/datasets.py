"""Bundled task data and JSON-lines loading."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError, InputError

FUNCTIONAL = ("antonym", "capitalize", "country_capital", "synonym")
BEHAVIORAL = ("detox", "sentiment")
SLOT = "{q}"
# train / validation / test fractions; the remainder after train+val is test.
SPLIT_FRACTIONS = (0.5, 0.2)


@dataclass(frozen=True)
class TaskSpec:
    name: str
    category: str
    pairs: tuple
    splits: dict = field(default_factory=dict)
    natural_templates: tuple = ()

    def __post_init__(self):
        if self.category not in ("functional", "behavioral"):
            raise ConfigurationError(f"unknown task category {self.category!r}")
        for t in self.natural_templates:
            if t.count(SLOT) != 1:
                raise ConfigurationError(f"template must contain exactly one {SLOT} slot: {t!r}")
        seen: set = set()
        for name, idx in self.splits.items():
            overlap = seen.intersection(idx)
            if overlap:
                raise ConfigurationError(f"split {name!r} overlaps another split at {sorted(overlap)[:5]}")
            seen.update(idx)

    @property
    def is_behavioral(self) -> bool:
        return self.category == "behavioral"

    def split(self, name: str) -> list:
        return [self.pairs[i] for i in self.splits[name]]

    @property
    def train(self) -> list:
        return self.split("train")

    @property
    def val(self) -> list:
        return self.split("val")

    @property
    def test(self) -> list:
        return self.split("test")


def make_splits(n: int, seed: int) -> dict:
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(round(n * SPLIT_FRACTIONS[0]))
    n_val = int(round(n * SPLIT_FRACTIONS[1]))
    return {
        "train": tuple(sorted(order[:n_train].tolist())),
        "val": tuple(sorted(order[n_train:n_train + n_val].tolist())),
        "test": tuple(sorted(order[n_train + n_val:].tolist())),
    }


def _read_jsonl(fh, source: str) -> list:
    pairs = []
    for lineno, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            pair = (rec["input"], rec["output"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"{source}:{lineno}: malformed record ({exc})") from None
        if not all(isinstance(s, str) for s in pair):
            raise InputError(f"{source}:{lineno}: input and output must be strings")
        pairs.append(pair)
    return pairs


def validate_pairs(pairs: list, category: str, source: str = "<task>") -> None:
    problems = []
    seen: dict = {}
    for i, (a, b) in enumerate(pairs, start=1):
        if not a.strip():
            problems.append(f"record {i}: empty input")
        if not b.strip():
            problems.append(f"record {i}: empty output")
        if a in seen:
            problems.append(f"record {i}: duplicate input {a!r} (first at record {seen[a]})")
        seen.setdefault(a, i)
        if category == "functional" and len(b.split()) > 1:
            problems.append(f"record {i}: functional output {b!r} is not a single word")
    if problems:
        raise InputError(f"{source}: invalid task data:\n  " + "\n  ".join(problems))


def load_task(
    path: str | Path,
    name: str | None = None,
    category: str = "functional",
    templates: list | None = None,
    seed: int = 0,
) -> TaskSpec:
    """Load a task from a JSON-lines file of ``{"input", "output"}`` records."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        pairs = _read_jsonl(fh, str(path))
    validate_pairs(pairs, category, str(path))
    return TaskSpec(
        name=name or path.stem,
        category=category,
        pairs=tuple(pairs),
        splits=make_splits(len(pairs), seed),
        natural_templates=tuple(templates or ()),
    )


def _data_file(name: str):
    return resources.files("svlab.tasks").joinpath("data", name)


@lru_cache(maxsize=None)
def load_templates() -> dict:
    return json.loads(_data_file("templates.json").read_text(encoding="utf-8"))


@lru_cache(maxsize=None)
def load_fillers() -> tuple:
    fillers = json.loads(_data_file("fillers.json").read_text(encoding="utf-8"))
    bad = [f for f in fillers if not 1 <= len(f.split()) <= 5]
    if bad:
        raise ConfigurationError(f"filler strings must be 1-5 words: {bad}")
    return tuple(fillers)


@lru_cache(maxsize=None)
def load_lexicons() -> dict:
    return json.loads(_data_file("lexicons.json").read_text(encoding="utf-8"))


@lru_cache(maxsize=None)
def builtin_task(name: str) -> TaskSpec:
    if name not in FUNCTIONAL + BEHAVIORAL:
        raise ConfigurationError(f"unknown builtin task {name!r}; known: {FUNCTIONAL + BEHAVIORAL}")
    category = "functional" if name in FUNCTIONAL else "behavioral"
    source = _data_file(f"{name}.jsonl")
    with source.open(encoding="utf-8") as fh:
        pairs = _read_jsonl(fh, f"{name}.jsonl")
    validate_pairs(pairs, category, f"{name}.jsonl")
    # Split seed derived from the name so each task's split is fixed.
    seed = sum(ord(c) * 131 ** i for i, c in enumerate(name)) % 2**32
    return TaskSpec(
        name=name,
        category=category,
        pairs=tuple(pairs),
        splits=make_splits(len(pairs), seed),
        natural_templates=tuple(load_templates().get(name, ())),
    )


def builtin_tasks() -> list:
    return [builtin_task(n) for n in FUNCTIONAL + BEHAVIORAL]
