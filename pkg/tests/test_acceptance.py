"""Acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (printed in the terminal summary) before
asserting. Criteria 3 and 7-10 need a trained toy model: by default the
module trains one with ``svlab train-toy`` and times it. Setting
``SVLAB_ACCEPTANCE_MODEL`` to a model written by ``train-toy`` skips
training; the training time is then read from the ``provenance.json``
next to it.
"""

from __future__ import annotations

import csv
import json
import os
import time
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

from svlab.cli import main
from svlab.core.hooks import HeadSubstitute, HookSet
from svlab.core.io import load_model
from svlab.core.model import forward
from svlab.harness.pipeline import method_metric
from svlab.harness.report import read_records
from svlab.metrics import BehaviorClassifier, ClassifierOutput, dist_n, fluency_gate, generation_entropy
from svlab.steering import compute_aie, principal_direction
from svlab.steering.fv import corrupted_prompts, mean_head_activations
from svlab.tasks import FUNCTIONAL, build_few_shot, build_zero_shot, builtin_task, shuffle_labels

from oracles import brute_force_aie, eigh_direction, sensitive_one_layer_model

TEN_MINUTES = 600.0

pytestmark = pytest.mark.slow


# --------------------------------------------------------------------------- 1-6: properties


def test_criterion_1_principal_direction(verdict):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 1.0
    for _ in range(200):
        n, dim = int(rng.integers(1, 65)), int(rng.integers(1, 257))
        m = rng.standard_normal((n, dim))
        worst = min(worst, abs(float(principal_direction(m) @ eigh_direction(m))))
    dt = time.perf_counter() - t0
    ok = worst >= 0.999 and dt < 10.0
    verdict(1, ok, f"min |cos| over 200 matrices = {worst:.6f} (>= 0.999), {dt:.2f}s (< 10s)")
    assert ok


def test_criterion_2_aie_oracle(verdict):
    t0 = time.perf_counter()
    model = sensitive_one_layer_model()
    task = builtin_task("antonym")
    means = mean_head_activations(model, task, n_prompts=8, n_shots=3)
    prompts = corrupted_prompts(model, task, n_prompts=4, n_shots=3)
    scores = compute_aie(model, task, means, prompts=prompts)
    oracle = brute_force_aie(model, prompts, means)
    dt = time.perf_counter() - t0
    err = max(abs(s.aie - oracle[s.layer, s.head]) for s in scores)
    ok = len(prompts) == 4 and len(scores) == 2 and err <= 1e-6 and dt < 10.0
    verdict(2, ok, f"max |batched - brute force| = {err:.2e} over 2 heads x 4 prompts (<= 1e-6), {dt:.2f}s (< 10s)")
    assert ok


def test_criterion_4_metric_fixtures(verdict):
    ge = generation_entropy("a b a b a b")
    d1 = dist_n("a b a", 1)
    clf = BehaviorClassifier(lambda text: ClassifierOutput(0.5, "negative"), mode="safety")

    def safe(p_unsafe):
        # the positive class of the safety classifier is "safe"
        return clf.success(ClassifierOutput(1.0 - p_unsafe, "negative" if p_unsafe > 0.5 else "positive"))

    safe_089, safe_091 = safe(0.89), safe(0.91)
    ok = abs(ge - 0.98548) <= 1e-5 and abs(d1 - 66.667) <= 0.01 and safe_089 and not safe_091
    verdict(4, ok, f"GE = {ge:.5f}, dist-1 = {d1:.3f}, P(unsafe) 0.89 safe={safe_089}, 0.91 safe={safe_091}")
    assert ok


class _Gen:
    def __init__(self, ge):
        self.ge = ge


def test_criterion_5_fluency_gate(verdict):
    recs = [_Gen(2.0), _Gen(2.5), _Gen(1.0)]
    kept, _ = fluency_gate(recs)
    excluded = kept == [recs[1]]
    r59 = fluency_gate([_Gen(3.0)] * 59 + [_Gen(1.0)] * 41)[1]
    r60 = fluency_gate([_Gen(3.0)] * 60 + [_Gen(1.0)] * 40)[1]
    ok = excluded and not r59.admissible and r60.admissible
    verdict(5, ok, f"GE <= 2.0 excluded={excluded}, 59% admissible={r59.admissible}, 60% admissible={r60.admissible}")
    assert ok


def test_criterion_6_prompts(verdict):
    golden = (build_zero_shot("hot") == "Q: hot\nA:"
              and build_few_shot([("big", "small")], "hot") == "Q: big\n A: small\n\nQ: hot\nA:")
    demos = [("big", "small"), ("hot", "cold"), ("up", "down"), ("wet", "dry"), ("old", "new")]
    rng = np.random.default_rng(6)
    bad = 0
    for _ in range(1000):
        out = shuffle_labels(demos, rng)
        same_inputs = [x for x, _ in out] == [x for x, _ in demos]
        same_multiset = Counter(y for _, y in out) == Counter(y for _, y in demos)
        bad += not (same_inputs and same_multiset and out != demos)
    ok = golden and bad == 0
    verdict(6, ok, f"golden prompts byte-exact={golden}, shuffle violations in 1000 trials = {bad}")
    assert ok


# --------------------------------------------------------------------------- toy model runs


def _cli(*args) -> float:
    t0 = time.perf_counter()
    assert main([str(a) for a in args]) == 0
    return time.perf_counter() - t0


@pytest.fixture(scope="module")
def toy(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    given = os.environ.get("SVLAB_ACCEPTANCE_MODEL")
    if given:
        path = Path(given)
        prov = json.loads((path.parent / "provenance.json").read_text())
        seconds = float(prov["train"]["train_seconds"])
    else:
        seconds = _cli("train-toy", "--out", root / "train")
        path = root / "train" / "model.svlm"
    cfg = root / "config.json"
    cfg.write_text(json.dumps({"version": 1, "model": str(path)}))
    return {"root": root, "model": path, "config": cfg, "train_seconds": seconds}


@pytest.fixture(scope="module")
def full_eval(toy):
    out = toy["root"] / "eval-t1"
    seconds = _cli("eval", "--config", toy["config"], "--out", out, "--threads", 1)
    return {"out": out, "seconds": seconds, "records": read_records(out / "results.jsonl")}


def test_criterion_3_identity_substitution(toy, verdict):
    model = load_model(toy["model"])
    prompts = corrupted_prompts(model, builtin_task("capitalize"), n_prompts=4, n_shots=10)
    _, trace = forward(model, list(prompts[0].tokens), HookSet(capture_heads=True))
    base = forward(model, list(prompts[0].tokens))[0]
    cfg = model.config
    logit_err = 0.0
    for l in range(cfg.n_layers):
        for h in range(cfg.n_heads):
            hook = HeadSubstitute(l, h, -1, trace.head_out[l, h, -1])
            out = forward(model, list(prompts[0].tokens), HookSet(head_substitute=(hook,)))[0]
            logit_err = max(logit_err, float(np.abs(out - base).max()))
    own = []
    for p in prompts:
        _, tr = forward(model, list(p.tokens), HookSet(capture_heads=True))
        own.append(tr.head_out[:, :, -1])
    scores = compute_aie(model, builtin_task("capitalize"), np.stack(own), prompts=prompts)
    aie_err = max(abs(s.aie) for s in scores)
    ok = len(scores) == cfg.total_heads and aie_err <= 1e-6 and logit_err <= 1e-6
    verdict(3, ok, f"{cfg.total_heads} heads: max |AIE| = {aie_err:.2e}, max |logit change| = {logit_err:.2e} (<= 1e-6)")
    assert ok


def test_criterion_7_end_to_end(toy, full_eval, verdict):
    recs = full_eval["records"]
    base = method_metric(recs, "capitalize", "baseline")
    fv = method_metric(recs, "capitalize", "fv")
    icv = method_metric(recs, "capitalize", "icv")
    wins, detail = 0, []
    for t in FUNCTIONAL:
        f, i = method_metric(recs, t, "fv"), method_metric(recs, t, "icv")
        # no admissible ICV means no gradable steered generations: it scores as 0 here
        wins += (f or 0.0) >= (i or 0.0)
        detail.append(f"{t} {f or 0.0:.1f}/{'n.a.' if i is None else f'{i:.1f}'}")
    checks = {
        "train <= 10 min": toy["train_seconds"] <= TEN_MINUTES,
        "FV >= base + 20": fv is not None and fv >= base + 20.0,
        "ICV > base": icv is not None and icv > base,
        "FV >= ICV on >= 3/4": wins >= 3,
        "eval <= 10 min": full_eval["seconds"] <= TEN_MINUTES,
    }
    failed = [k for k, v in checks.items() if not v]
    icv_txt = "n.a." if icv is None else f"{icv:.1f}"
    verdict(7, not failed,
            f"train {toy['train_seconds']:.0f}s, eval {full_eval['seconds']:.0f}s; capitalize base {base:.1f}, "
            f"FV {fv:.1f}, ICV {icv_txt}; FV/ICV {', '.join(detail)} ({wins}/4)"
            + (f"; failed: {', '.join(failed)}" if failed else ""))
    assert not failed


def test_criterion_8_ablation(toy, verdict):
    out = toy["root"] / "ablate"
    _cli("ablate", "--config", toy["config"], "--out", out)
    rows = list(csv.DictReader(open(out / "ablation.csv", encoding="utf-8")))
    icv = {(r["task"], r["location"]): float(r["metric"]) for r in rows if r["kind"] == "icv"}
    single_ok, detail = True, []
    for t in FUNCTIONAL:
        one, every = icv[(t, "middle-1")], icv[(t, "all")]
        single_ok &= one <= every
        detail.append(f"{t} {one:.1f}<={every:.1f}")
    recs = read_records(out / "results.jsonl")
    ge_default = float(np.mean([r.ge for r in recs if r.method == "fv@default"]))
    ge_all = float(np.mean([r.ge for r in recs if r.method == "fv@all"]))
    ok = single_ok and ge_all < ge_default
    verdict(8, ok, f"ICV single vs all layers: {', '.join(detail)}; FV mean GE all layers {ge_all:.3f} "
                   f"< default layer {ge_default:.3f}")
    assert ok


def test_criterion_9_cie_correlation(toy, verdict):
    out = toy["root"] / "cie"
    _cli("cie-map", "--config", toy["config"], "--out", out)
    rho = json.loads((out / "cie_correlation.json").read_text())["spearman"]
    n = json.loads((out / "cie_correlation.json").read_text())["n_tasks"]
    ok = rho is not None and n == 6 and rho > 0
    verdict(9, ok, f"Spearman(total mean CIE, FV gain) over {n} tasks = {rho if rho is None else round(rho, 4)} (> 0)")
    assert ok


def test_criterion_10_threads(toy, full_eval, verdict):
    out = toy["root"] / "eval-t8"
    _cli("eval", "--config", toy["config"], "--out", out, "--threads", 8)
    a = (full_eval["out"] / "results.jsonl").read_bytes()
    b = (out / "results.jsonl").read_bytes()
    ok = a == b and len(a) > 0
    verdict(10, ok, f"results.jsonl at --threads 1 and 8: {len(a)} vs {len(b)} bytes, identical={a == b}")
    assert ok
