"""End-to-end steps shared by the CLI and the test-suite."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..core.config import ModelConfig
from ..core.curriculum import build_curriculum
from ..core.io import load_model
from ..core.model import ModelBundle
from ..core.train import TrainConfig, train_toy
from ..errors import ConfigurationError
from ..steering import InContextVector, load_vectors
from ..tasks.datasets import builtin_task
from ..tasks.prompts import PromptStyle
from .config import RunConfig
from .evaluate import EvalContext, evaluate, mean_metric
from .experiments import ablate, cie_report, extract_fvs, extract_icv, sweep_icv

log = logging.getLogger(__name__)


def train_from_config(config: RunConfig) -> tuple[ModelBundle, dict]:
    t = config.train
    cur = build_curriculum(n_docs=t.n_docs, seed=t.curriculum_seed, shuffled_fraction=t.shuffled_fraction,
                           sentence_echo_fraction=t.sentence_echo_fraction)
    m = t.model
    mcfg = ModelConfig(n_layers=m.n_layers, n_heads=m.n_heads, d_model=m.d_model, d_head=m.d_head,
                       vocab_size=len(cur.tokenizer), max_seq_len=m.max_seq_len, seed=m.seed, d_mlp=m.d_mlp,
                       parallel_blocks=m.parallel_blocks)
    tc = TrainConfig(steps=t.steps, lr=t.lr, batch_size=t.batch_size, warmup=t.warmup,
                     weight_decay=t.weight_decay)
    t0 = time.perf_counter()
    model = train_toy(cur, mcfg, train_config=tc)
    info = {"train_seconds": time.perf_counter() - t0, "n_docs": len(cur)}
    model.metadata["train"].update({"n_docs": t.n_docs, "batch_size": t.batch_size,
                                    "shuffled_fraction": t.shuffled_fraction,
                                    "sentence_echo_fraction": t.sentence_echo_fraction})
    return model, info


def resolve_model(config: RunConfig) -> ModelBundle:
    if not config.model:
        raise ConfigurationError("no model path: set 'model' in the config or pass --model")
    return load_model(config.model)


def tasks_of(config: RunConfig) -> list:
    return [builtin_task(t) for t in config.tasks]


def styles_for(task, config: RunConfig) -> list:
    if task.is_behavioral:
        return ["zero_shot"]
    return [s for s in config.styles
            if PromptStyle.parse(s).kind != "natural" or task.natural_templates]


@dataclass
class Comparison:
    records: list = field(default_factory=list)
    fv: dict = field(default_factory=dict)
    sweeps: dict = field(default_factory=dict)
    icv: dict = field(default_factory=dict)


def load_icvs(path: str) -> dict:
    """Per (task -> seed -> ICV) from a vector file written by ``extract-icv``/``sweep``."""
    out: dict = {}
    for v in load_vectors(path):
        if isinstance(v, InContextVector):
            out.setdefault(v.source_task, {})[int(v.metadata.get("seed", 0))] = v
    return out


def load_fvs(path: str) -> dict:
    return {v.source_task: v for v in load_vectors(path) if v.kind == "fv"}


def compare_methods(model: ModelBundle, config: RunConfig, ctx: EvalContext) -> Comparison:
    """Baseline, FV and best swept ICV on every configured task and style."""
    res = Comparison()
    tasks = tasks_of(config)
    fv_vectors: dict = {}
    if "fv" in config.methods:
        if config.vectors.get("fv"):
            fv_vectors = load_fvs(config.vectors["fv"])
        else:
            res.fv = extract_fvs(model, tasks, config)
            fv_vectors = {t: e.vector for t, e in res.fv.items()}
    icv_vectors: dict = {}
    if "icv" in config.methods:
        if config.vectors.get("icv"):
            icv_vectors = load_icvs(config.vectors["icv"])
        else:
            for t in tasks:
                sw = sweep_icv(model, t, config.icv.grid, ctx)
                res.sweeps[t.name] = sw
                if sw.admissible:
                    icv_vectors[t.name] = sw.vectors
    res.icv = icv_vectors
    for t in tasks:
        for style in styles_for(t, config):
            if "baseline" in config.methods:
                res.records += evaluate(model, None, t, style, config.n_eval, config.seeds, ctx)
            if t.name in fv_vectors:
                res.records += evaluate(model, fv_vectors[t.name], t, style, config.n_eval, config.seeds, ctx)
            if t.name in icv_vectors:
                res.records += evaluate(model, icv_vectors[t.name], t, style, config.n_eval, config.seeds, ctx)
    return res


def method_metric(records, task: str, method: str, style: str = "zero_shot", threshold: float = 2.0):
    sel = [r for r in records if r.task == task and r.method == method and r.style == style]
    return mean_metric(sel, threshold) if sel else None


def run_cie(model: ModelBundle, config: RunConfig, comparison: Comparison):
    thr = config.metrics.ge_threshold
    scores = {t: e.scores for t, e in comparison.fv.items()}
    gains = {}
    for t in scores:
        fv = method_metric(comparison.records, t, "fv", threshold=thr)
        base = method_metric(comparison.records, t, "baseline", threshold=thr)
        gains[t] = fv - base
    return cie_report(scores, gains, config.fv.k, model.config.total_heads)


def run_ablations(model: ModelBundle, config: RunConfig, ctx: EvalContext, comparison: Comparison) -> list:
    out = []
    for t in tasks_of(config):
        if "fv" in config.ablation.applies_to and t.name in comparison.fv:
            out.append(ablate(model, comparison.fv[t.name].vector, config.ablation, t, ctx))
        if "icv" in config.ablation.applies_to:
            vec = comparison.icv.get(t.name)
            if vec is None:
                vec = {s: extract_icv(model, t, config, config.icv.n_demos, config.icv.strength, s)
                       for s in config.seeds}
            out.append(ablate(model, vec, config.ablation, t, ctx))
    return out


def dump_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")
