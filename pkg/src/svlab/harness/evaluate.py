"""Baseline and steered evaluation over held-out queries."""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from ..core.hooks import EMPTY, HookSet
from ..core.model import ModelBundle, generate_batch
from ..errors import ConfigurationError, InputError
from ..metrics import (
    BehaviorClassifier,
    answer_span,
    containment_accuracy,
    dist_n,
    first_word_accuracy,
    fluency_gate,
    generation_entropy,
)
from ..steering import FunctionVector, InContextVector, make_fv_hooks, make_icv_hooks
from ..tasks.datasets import TaskSpec, load_lexicons
from ..tasks.prompts import PromptStyle, build_prompt
from .config import MetricSection, RunConfig


def stable_key(*parts) -> int:
    """Deterministic 32-bit key for strings and ints (unlike ``hash``)."""
    return zlib.crc32("\x1f".join(str(p) for p in parts).encode("utf-8"))


def item_rng(*parts) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([stable_key(*parts)]))


@dataclass
class EvalRecord:
    task: str
    method: str
    style: str
    seed: int
    index: int
    query: str
    prompt: str
    generation: str
    label: str
    correct: bool
    ge: float
    dist1: float
    dist2: float
    gradable: bool
    classifier_prob: float | None = None
    vector: dict = field(default_factory=dict)
    config_hash: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalRecord":
        return cls(**d)


class Executor:
    """Order-preserving map over work items on ``threads`` workers."""

    def __init__(self, threads: int = 1):
        self.threads = max(1, int(threads))
        self._pool = ThreadPoolExecutor(self.threads) if self.threads > 1 else None

    def map(self, fn: Callable, items: Sequence) -> list:
        if self._pool is None:
            return [fn(x) for x in items]
        return list(self._pool.map(fn, items))

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def default_classifiers(metrics: MetricSection) -> dict:
    lex = load_lexicons()
    modes = {"detox": "safety", "sentiment": "target"}
    out = {}
    for task, mode in modes.items():
        clf = BehaviorClassifier.from_lexicon(lex[task], mode, metrics.lexicon_beta)
        out[task] = BehaviorClassifier(clf.score, mode, metrics.unsafe_threshold)
    return out


@dataclass
class EvalContext:
    config: RunConfig
    executor: Executor
    classifiers: dict
    config_hash: str

    @classmethod
    def from_config(cls, config: RunConfig, executor: Executor | None = None) -> "EvalContext":
        return cls(config, executor or Executor(config.threads), default_classifiers(config.metrics), config.hash())


def vector_hooks(vector, config: RunConfig, layers: Sequence[int] | None = None) -> HookSet:
    if vector is None:
        return EMPTY
    if isinstance(vector, InContextVector):
        return make_icv_hooks(vector, layers, relative=config.icv.relative)
    if isinstance(vector, FunctionVector):
        return make_fv_hooks(vector, layers)
    raise TypeError(f"not a steering vector: {type(vector).__name__}")


def vector_meta(vector, layers=None) -> dict:
    if vector is None:
        return {}
    if isinstance(vector, InContextVector):
        meta = {"kind": "icv", "strength": vector.strength, "n_demos": vector.n_demos,
                "demo_style": vector.demo_style, "renormalize": vector.renormalize,
                "source_task": vector.source_task}
    else:
        meta = {"kind": "fv", "head_set": [list(h) for h in vector.head_set],
                "target_layers": list(vector.target_layers), "source_task": vector.source_task}
    if layers is not None:
        meta["layers"] = [int(l) for l in layers]
    return meta


def sample_queries(task: TaskSpec, split: str, n: int, run_seed: int, seed: int) -> list:
    """``n`` distinct (query, label) pairs; depends only on the seeds and task."""
    pool = task.split(split)
    if not pool:
        raise InputError(f"task {task.name!r} has an empty {split} split")
    order = item_rng("queries", run_seed, seed, task.name).permutation(len(pool))
    return [(int(i), pool[int(i)]) for i in order[: min(n, len(pool))]]


def check_style(task: TaskSpec, style: PromptStyle) -> None:
    if task.is_behavioral and style.kind != "zero_shot":
        raise ConfigurationError(f"behavioral task {task.name!r} is evaluated zero-shot only, not {style.label}")
    if style.kind == "natural" and not task.natural_templates:
        raise ConfigurationError(f"task {task.name!r} has no natural-text templates")


def _score(task: TaskSpec, style: PromptStyle, generation: str, label: str, ctx: EvalContext):
    if task.is_behavioral:
        clf = ctx.classifiers.get(task.name)
        if clf is None:
            raise ConfigurationError(f"no classifier registered for task {task.name!r}")
        out = clf.score(answer_span(generation))
        return clf.success(out), out.probability
    if style.kind == "natural":
        return containment_accuracy(generation, label), None
    return first_word_accuracy(generation, label), None


def evaluate(
    model: ModelBundle,
    vector,
    task: TaskSpec,
    style: PromptStyle | str,
    n: int,
    seeds: Sequence[int],
    ctx: EvalContext,
    *,
    method: str | None = None,
    layers: Sequence[int] | None = None,
    split: str | None = None,
) -> list:
    """Generate and score ``n`` held-out queries per seed.

    ``vector`` is ``None`` (baseline), a steering vector, or a mapping from
    seed to vector (per-seed ICVs). ``layers`` overrides the vector's layer
    placement. Queries and demonstrations depend only on (run seed, seed,
    task, style, item index), so every method sees the same prompts.
    """
    style = PromptStyle.parse(style) if isinstance(style, str) else style
    check_style(task, style)
    cfg = ctx.config
    split = split or cfg.eval_split
    tok = model.tokenizer
    if method is None:
        method = "baseline" if vector is None else ("icv" if _first(vector).kind == "icv" else "fv")
    chunks = []
    for seed in seeds:
        vec = vector.get(seed) if isinstance(vector, Mapping) else vector
        if isinstance(vector, Mapping) and vec is None:
            raise InputError(f"no vector for seed {seed}")
        hooks = vector_hooks(vec, cfg, layers)
        meta = vector_meta(vec, layers)
        items = []
        for index, (q, a) in sample_queries(task, split, n, cfg.seed, seed):
            rng = item_rng("demos", cfg.seed, seed, task.name, style.label, index)
            demos = []
            if style.n_shots:
                pool = task.train
                pick = rng.choice(len(pool), size=style.n_shots, replace=False)
                demos = [pool[int(i)] for i in pick]
            prompt = build_prompt(style, task, q, demos, rng)
            ids = tok.encode(prompt)
            if len(ids) >= model.config.max_seq_len:
                raise InputError(f"{style.label} prompt for {task.name!r} has {len(ids)} tokens; too long")
            items.append((seed, index, q, a, prompt, ids))
        for start in range(0, len(items), cfg.chunk_size):
            chunks.append((items[start:start + cfg.chunk_size], hooks, meta))

    def run_chunk(chunk) -> list:
        items, hooks, meta = chunk
        by_len: dict = {}
        for j, it in enumerate(items):
            by_len.setdefault(len(it[5]), []).append(j)
        gens: list = [None] * len(items)
        for length in sorted(by_len):
            js = by_len[length]
            outs = generate_batch(model, [items[j][5] for j in js], cfg.max_new_tokens, hooks)
            for j, o in zip(js, outs):
                gens[j] = tok.decode(o)
        recs = []
        for (seed, index, q, a, prompt, _), gen in zip(items, gens):
            ok, prob = _score(task, style, gen, a, ctx)
            ge = generation_entropy(gen, tuple(cfg.metrics.ge_weights))
            recs.append(EvalRecord(
                task=task.name, method=method, style=style.label, seed=int(seed), index=index,
                query=q, prompt=prompt, generation=gen, label=a, correct=bool(ok),
                ge=float(ge), dist1=dist_n(gen, 1), dist2=dist_n(gen, 2),
                gradable=bool(ge > cfg.metrics.ge_threshold), classifier_prob=prob,
                vector=meta, config_hash=ctx.config_hash,
            ))
        return recs

    return [r for recs in ctx.executor.map(run_chunk, chunks) for r in recs]


def _first(vector):
    if isinstance(vector, Mapping):
        return next(iter(vector.values()))
    return vector


def task_metric(records: Sequence[EvalRecord], threshold: float = 2.0) -> float:
    """Percentage of gradable records that are correct (0 when none are gradable).

    For behavioral tasks ``correct`` already encodes the classifier's
    success decision, so this is the behavioral shift over gradable records.
    """
    gradable, _ = fluency_gate(records, threshold)
    if not gradable:
        return 0.0
    return 100.0 * sum(r.correct for r in gradable) / len(gradable)


def gate_report(records: Sequence[EvalRecord], metrics: MetricSection):
    return fluency_gate(records, metrics.ge_threshold, metrics.min_gradable)[1]


def by_seed(records: Sequence[EvalRecord]) -> dict:
    out: dict = {}
    for r in records:
        out.setdefault(r.seed, []).append(r)
    return dict(sorted(out.items()))


def mean_metric(records: Sequence[EvalRecord], threshold: float = 2.0) -> float:
    """Task metric averaged over seeds."""
    groups = by_seed(records)
    if not groups:
        raise InputError("no records")
    return float(np.mean([task_metric(g, threshold) for g in groups.values()]))
