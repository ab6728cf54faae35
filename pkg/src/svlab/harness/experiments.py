"""Vector extraction, ICV sweeps, layer ablations and the CIE correlation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import spearmanr

from ..core.model import ModelBundle
from ..errors import ConfigurationError, InputError
from ..steering import (
    FunctionVector,
    InContextVector,
    average_scores,
    build_fv,
    build_icv,
    cie_summary,
    compute_aie,
    default_k,
    mean_head_activations,
)
from ..tasks.datasets import TaskSpec
from ..tasks.prompts import DemoStyle, make_contrast_pairs
from .config import AblationSpec, RunConfig, SweepGrid
from .evaluate import EvalContext, by_seed, evaluate, gate_report, item_rng, mean_metric, task_metric


# --------------------------------------------------------------------------- extraction


def fv_shots(task: TaskSpec, config: RunConfig) -> int:
    """Shots per extraction prompt; behavioral sentences need fewer to fit."""
    return config.fv.behavioral_n_shots if task.is_behavioral else config.fv.n_shots


@dataclass
class FVExtraction:
    vector: FunctionVector
    means: np.ndarray
    scores: list


def extract_fv(model: ModelBundle, task: TaskSpec, config: RunConfig, scores=None) -> FVExtraction:
    """Means, AIE scores and the function vector for one task.

    ``scores`` replaces the task's own AIE ranking (cross-task selection).
    """
    shots = fv_shots(task, config)
    means = mean_head_activations(model, task, config.fv.n_mean_prompts, shots, seed=config.seed)
    own = compute_aie(model, task, means, config.fv.n_aie_prompts, shots, seed=config.seed + 1)
    layers = None if config.fv.layer is None else (config.fv.layer,)
    fv = build_fv(model, means, scores if scores is not None else own, config.fv.k, layers, task.name)
    fv.metadata.update({"n_mean_prompts": config.fv.n_mean_prompts, "n_shots": shots,
                        "n_aie_prompts": config.fv.n_aie_prompts, "cross_task": scores is not None})
    return FVExtraction(fv, means, own)


def extract_fvs(model: ModelBundle, tasks: Sequence[TaskSpec], config: RunConfig) -> dict:
    out = {t.name: extract_fv(model, t, config) for t in tasks}
    if config.fv.cross_task_heads:
        shared = average_scores([e.scores for e in out.values()])
        for t in tasks:
            e = out[t.name]
            out[t.name] = FVExtraction(
                extract_fv(model, t, config, scores=shared).vector, e.means, e.scores
            )
    return out


def demo_style_for(task: TaskSpec, grid: SweepGrid) -> DemoStyle:
    return DemoStyle.default(grid.style_for(task.name, task.category))


def extract_icv(model: ModelBundle, task: TaskSpec, config: RunConfig, n_demos: int, strength: float,
                seed: int) -> InContextVector:
    style = demo_style_for(task, config.icv.grid)
    rng = item_rng("icv-demos", config.seed, seed, task.name, n_demos)
    pairs = make_contrast_pairs(task, style, n_demos, rng)
    icv = build_icv(model, pairs, strength, config.icv.renormalize, center=config.icv.center,
                    demo_style=style.kind, source_task=task.name, seed=seed)
    icv.metadata.update({"seed": seed, "relative": config.icv.relative})
    return icv


# --------------------------------------------------------------------------- sweep


@dataclass
class SweepResult:
    task: str
    table: list
    best: dict | None
    vectors: dict = field(default_factory=dict)

    @property
    def admissible(self) -> bool:
        return self.best is not None


def sweep_icv(model: ModelBundle, task: TaskSpec, grid: SweepGrid, ctx: EvalContext) -> SweepResult:
    """Evaluate every (strength, demo count, seed) cell on the validation slice.

    A (strength, demo count) setting is admissible when its records pooled
    over seeds pass the fluency gate. The best admissible setting has the
    highest seed-averaged task metric; ties go to the smaller strength, then
    the smaller demo count. ``vectors`` holds the best setting's per-seed ICV.
    """
    grid.validate()
    cfg = ctx.config
    thr = cfg.metrics.ge_threshold
    table, cells = [], {}
    for k in grid.demo_counts:
        bases = {s: extract_icv(model, task, cfg, int(k), 0.0, s) for s in cfg.seeds}
        for lam in grid.strengths:
            vecs = {s: v.with_strength(lam) for s, v in bases.items()}
            recs = evaluate(model, vecs, task, "zero_shot", cfg.icv.n_sweep, cfg.seeds, ctx,
                            split=cfg.icv.sweep_split, method="icv")
            pooled = gate_report(recs, cfg.metrics)
            per_seed = by_seed(recs)
            for s in cfg.seeds:
                rep = gate_report(per_seed[s], cfg.metrics)
                table.append({
                    "task": task.name, "strength": float(lam), "n_demos": int(k), "seed": int(s),
                    "metric": task_metric(per_seed[s], thr),
                    "ge": float(np.mean([r.ge for r in per_seed[s]])),
                    "gradable_fraction": rep.fraction, "admissible": rep.admissible,
                    "cell_admissible": pooled.admissible,
                })
            cells[(float(lam), int(k))] = (mean_metric(recs, thr), pooled.admissible, vecs)
    admissible = [(key, v) for key, v in cells.items() if v[1]]
    if not admissible:
        return SweepResult(task.name, table, None)
    (lam, k), (metric, _, vecs) = min(admissible, key=lambda kv: (-kv[1][0], kv[0][0], kv[0][1]))
    return SweepResult(task.name, table, {"strength": lam, "n_demos": k, "metric": metric}, vecs)


# --------------------------------------------------------------------------- ablation


def middle_layers(n_layers: int, n: int) -> tuple:
    """The ``n`` layers centered on ``n_layers // 2``; even spans extend one more to the left."""
    if not 1 <= n <= n_layers:
        raise ConfigurationError(f"cannot take {n} middle layers of {n_layers}")
    start = min(max(n_layers // 2 - n // 2, 0), n_layers - n)
    return tuple(range(start, start + n))


def location_sets(n_layers: int, default: Sequence[int], spec: AblationSpec) -> dict:
    spec.validate()
    out = {}
    for name in spec.locations:
        if name == "default":
            layers = tuple(default)
        elif name == "all":
            layers = tuple(range(n_layers))
        else:
            layers = middle_layers(n_layers, int(name.split("-")[1]))
        if not layers or any(not 0 <= l < n_layers for l in layers):
            raise ConfigurationError(f"location {name!r} has layers {layers} outside [0, {n_layers})")
        out[name] = layers
    return out


def default_layers(vector, n_layers: int) -> tuple:
    v = next(iter(vector.values())) if isinstance(vector, Mapping) else vector
    if isinstance(v, FunctionVector):
        return tuple(v.target_layers)
    return tuple(range(n_layers))


@dataclass
class AblationResult:
    task: str
    kind: str
    locations: dict
    records: dict
    summary: list


def ablate(model: ModelBundle, vector, spec: AblationSpec, task: TaskSpec, ctx: EvalContext,
           style: str = "zero_shot") -> AblationResult:
    """Re-apply one vector at each location set; report metric deltas vs default and GE."""
    cfg = ctx.config
    L = model.config.n_layers
    v0 = next(iter(vector.values())) if isinstance(vector, Mapping) else vector
    kind = v0.kind
    locs = location_sets(L, default_layers(vector, L), spec)
    if "default" not in locs:
        locs = {"default": default_layers(vector, L), **locs}
    records, summary = {}, []
    for name, layers in locs.items():
        records[name] = evaluate(model, vector, task, style, cfg.n_eval, cfg.seeds, ctx,
                                 method=f"{kind}@{name}", layers=layers)
    base = mean_metric(records["default"], cfg.metrics.ge_threshold)
    for name, layers in locs.items():
        recs = records[name]
        m = mean_metric(recs, cfg.metrics.ge_threshold)
        summary.append({
            "task": task.name, "kind": kind, "location": name, "layers": list(layers),
            "metric": m, "delta": m - base, "ge": float(np.mean([r.ge for r in recs])),
            "gradable_fraction": gate_report(recs, cfg.metrics).fraction,
        })
    return AblationResult(task.name, kind, locs, records, summary)


# --------------------------------------------------------------------------- CIE


@dataclass
class CIEReport:
    rows: list
    spearman: float | None
    note: str = ""


def cie_report(scores: Mapping[str, list], gains: Mapping[str, float], k: int | None = None,
               total_heads: int | None = None) -> CIEReport:
    """Per-task (total mean CIE, FV gain) table and their Spearman rank correlation.

    The correlation is left undefined (``None``) for fewer than two tasks or
    when either column is constant.
    """
    if not scores:
        raise InputError("no tasks")
    if k is None:
        if total_heads is None:
            total_heads = len(next(iter(scores.values())))
        k = default_k(total_heads)
    rows = []
    for task in scores:
        s = cie_summary(scores[task], k)
        rows.append({"task": task, "k": k, "total_mean_cie": s["mean"], "total_sum_cie": s["sum"],
                     "fv_gain": float(gains[task])})
    if len(rows) < 2:
        return CIEReport(rows, None, "fewer than two tasks: correlation undefined")
    x = [r["total_mean_cie"] for r in rows]
    y = [r["fv_gain"] for r in rows]
    if len(set(x)) < 2 or len(set(y)) < 2:
        return CIEReport(rows, None, "a column is constant: correlation undefined")
    rho = float(spearmanr(x, y).statistic)
    if math.isnan(rho):
        return CIEReport(rows, None, "correlation undefined")
    return CIEReport(rows, rho)
