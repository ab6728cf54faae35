from __future__ import annotations

import csv
import json
from dataclasses import replace

import numpy as np
import pytest

from svlab.cli import main
from svlab.core.io import save_model
from svlab.errors import ConfigurationError, InputError
from svlab.harness import svg
from svlab.harness.config import config_from_dict, load_config
from svlab.harness.evaluate import EvalContext, EvalRecord, Executor, evaluate, item_rng, sample_queries, task_metric
from svlab.harness.experiments import cie_report, location_sets, middle_layers, sweep_icv
from svlab.harness.config import AblationSpec, SweepGrid
from svlab.harness.report import SUMMARY_FIELDS, summarize
from svlab.steering import HeadScore
from svlab.tasks import builtin_task

from conftest import make_model

SMALL = {
    "version": 1,
    "tasks": ["antonym", "detox"],
    "n_eval": 4,
    "seeds": [0, 1],
    "max_new_tokens": 12,
    "chunk_size": 3,
    "icv": {"grid": {"strengths": [0.0, 0.1], "demo_counts": [2]}, "n_sweep": 3, "n_demos": 2},
    "fv": {"n_mean_prompts": 4, "n_aie_prompts": 2, "n_shots": 3, "behavioral_n_shots": 2},
    "ablation": {"locations": ["default", "all"]},
}


@pytest.fixture(scope="module")
def model_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("m") / "tiny.svlm"
    save_model(make_model(seed=2, scale=3.0), path)
    return path


@pytest.fixture(scope="module")
def config_file(tmp_path_factory, model_file):
    path = tmp_path_factory.mktemp("c") / "cfg.json"
    path.write_text(json.dumps({**SMALL, "model": str(model_file)}), encoding="utf-8")
    return path


# --------------------------------------------------------------------------- config


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigurationError, match="bogus"):
        config_from_dict({"version": 1, "bogus": 1})
    with pytest.raises(ConfigurationError, match="icv.grid"):
        config_from_dict({"version": 1, "icv": {"grid": {"lambdas": [1]}}})


def test_config_validation():
    with pytest.raises(ConfigurationError, match="version"):
        config_from_dict({"tasks": ["antonym"]})
    with pytest.raises(ConfigurationError):
        config_from_dict({"version": 2})
    with pytest.raises(ConfigurationError):
        config_from_dict({"version": 1, "n_eval": "ten"})
    with pytest.raises(ConfigurationError):
        config_from_dict({"version": 1, "tasks": ["nope"]})
    with pytest.raises(ConfigurationError):
        config_from_dict({"version": 1, "ablation": {"locations": ["middle-3"]}})


def test_config_roundtrip_and_hash(tmp_path):
    cfg = config_from_dict(SMALL)
    assert config_from_dict(cfg.to_dict()) == cfg
    assert replace(cfg, threads=8, out="x").hash() == cfg.hash()
    assert replace(cfg, n_eval=5).hash() != cfg.hash()
    p = tmp_path / "c.json"
    p.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        load_config(p)


# --------------------------------------------------------------------------- evaluation plumbing


def test_item_rng_is_keyed():
    a = item_rng("x", 1, 2).integers(1 << 30, size=4)
    assert np.array_equal(a, item_rng("x", 1, 2).integers(1 << 30, size=4))
    assert not np.array_equal(a, item_rng("x", 1, 3).integers(1 << 30, size=4))


def test_sample_queries_vary_by_seed_only():
    t = builtin_task("antonym")
    q0 = sample_queries(t, "test", 5, 0, 0)
    assert q0 == sample_queries(t, "test", 5, 0, 0)
    assert q0 != sample_queries(t, "test", 5, 0, 1)
    assert len({i for i, _ in q0}) == 5


def test_evaluate_thread_invariance():
    m = make_model(seed=2, scale=3.0)
    cfg = config_from_dict(SMALL)
    t = builtin_task("antonym")
    outs = []
    for threads in (1, 4):
        with Executor(threads) as ex:
            ctx = EvalContext.from_config(cfg, ex)
            outs.append([r.to_dict() for r in evaluate(m, None, t, "few_shot_2", 5, (0, 1), ctx)])
    assert outs[0] == outs[1] and len(outs[0]) == 10


def test_behavioral_zero_shot_only():
    m = make_model()
    ctx = EvalContext.from_config(config_from_dict(SMALL))
    with pytest.raises(ConfigurationError):
        evaluate(m, None, builtin_task("detox"), "few_shot_2", 2, (0,), ctx)


def _rec(correct, ge, seed=0, task="antonym", method="baseline"):
    return EvalRecord(task=task, method=method, style="zero_shot", seed=seed, index=0, query="q", prompt="p",
                      generation="g", label="l", correct=correct, ge=ge, dist1=50.0, dist2=50.0,
                      gradable=ge > 2.0, classifier_prob=None, vector={}, config_hash="h")


def test_task_metric_uses_gradable_only():
    recs = [_rec(True, 3.0), _rec(True, 1.0), _rec(False, 2.5), _rec(False, 2.0)]
    assert task_metric(recs) == 50.0
    assert task_metric([_rec(True, 1.0)]) == 0.0


def test_summary_schema():
    recs = [_rec(True, 3.0, 0), _rec(False, 3.0, 1), _rec(True, 3.0, 0, "detox")]
    rows = summarize(recs)
    assert all(tuple(r) == SUMMARY_FIELDS for r in rows)
    acc = next(r for r in rows if r["task"] == "antonym" and r["metric"] == "accuracy")
    assert acc["mean"] == 50.0 and acc["n"] == 2 and acc["std"] == pytest.approx(np.std([100, 0], ddof=1))
    assert any(r["metric"] == "behavioral_shift" for r in rows if r["task"] == "detox")


def test_record_roundtrip():
    r = _rec(True, 3.0)
    assert EvalRecord.from_dict(json.loads(json.dumps(r.to_dict()))) == r


# --------------------------------------------------------------------------- sweep / ablation / cie


def test_middle_layer_rule():
    assert middle_layers(4, 1) == (2,)
    assert middle_layers(4, 2) == (1, 2)
    assert middle_layers(4, 4) == (0, 1, 2, 3)
    assert middle_layers(32, 4) == (14, 15, 16, 17)
    assert middle_layers(5, 3) == (1, 2, 3)
    with pytest.raises(ConfigurationError):
        middle_layers(2, 4)
    locs = location_sets(4, (1,), AblationSpec())
    assert locs == {"default": (1,), "middle-1": (2,), "middle-2": (1, 2), "middle-4": (0, 1, 2, 3),
                    "all": (0, 1, 2, 3)}


def test_sweep_table_complete():
    m = make_model(seed=2, scale=3.0)
    cfg = config_from_dict(SMALL)
    grid = SweepGrid(strengths=(0.0, 0.05, 0.1), demo_counts=(1, 2))
    res = sweep_icv(m, builtin_task("antonym"), grid, EvalContext.from_config(cfg))
    cells = {(r["strength"], r["n_demos"], r["seed"]) for r in res.table}
    assert cells == {(s, k, seed) for s in grid.strengths for k in grid.demo_counts for seed in cfg.seeds}
    if res.best is None:
        assert res.vectors is None or not res.vectors
    else:
        assert set(res.vectors) == set(cfg.seeds)


def test_cie_report():
    scores = {"a": [HeadScore(0, 0, 0.3), HeadScore(0, 1, 0.1)],
              "b": [HeadScore(0, 0, 0.1), HeadScore(0, 1, 0.0)],
              "c": [HeadScore(0, 0, 0.2), HeadScore(0, 1, 0.2)]}
    rep = cie_report(scores, {"a": 30.0, "b": -5.0, "c": 10.0}, k=1)
    assert rep.spearman == pytest.approx(1.0)
    one = cie_report({"a": scores["a"]}, {"a": 1.0}, k=1)
    assert one.spearman is None
    flat = cie_report(scores, {"a": 1.0, "b": 1.0, "c": 1.0}, k=1)
    assert flat.spearman is None and flat.note


# --------------------------------------------------------------------------- svg


def test_svg_byte_stable():
    a = svg.bar_chart("t", ["x", "y"], {"m": [1.0, 2.0], "n": [0.5, -1.0]}, "v")
    b = svg.bar_chart("t", ["x", "y"], {"m": [1.0, 2.0], "n": [0.5, -1.0]}, "v")
    assert a == b and a.startswith("<svg") and a.endswith("</svg>\n")
    for chart in (svg.line_chart("t", [0.0, 1.0], {"k": [1.0, 2.0]}), svg.scatter_chart("t", [(0.1, 2.0, "a")]),
                  svg.heatmap("t", [[0.0, 1.0], [0.5, -0.5]]), svg.bar_chart("<&>", [], {})):
        assert chart.count("<svg") == 1 and "nan" not in chart.lower()


# --------------------------------------------------------------------------- CLI


def test_cli_eval_threads_identical(tmp_path, config_file):
    outs = []
    for threads in (1, 8):
        out = tmp_path / f"t{threads}"
        assert main(["eval", "--config", str(config_file), "--threads", str(threads), "--out", str(out)]) == 0
        outs.append(out)
    assert (outs[0] / "results.jsonl").read_bytes() == (outs[1] / "results.jsonl").read_bytes()
    assert (outs[0] / "summary.csv").read_bytes() == (outs[1] / "summary.csv").read_bytes()
    prov = json.loads((outs[0] / "provenance.json").read_text())
    assert prov["command"] == "eval" and prov["config"]["n_eval"] == 4 and "task:antonym" in prov["data_hashes"]
    rows = list(csv.DictReader(open(outs[0] / "summary.csv")))
    assert tuple(rows[0]) == SUMMARY_FIELDS
    assert {r["method"] for r in rows} >= {"baseline", "fv"}
    assert list(outs[0].glob("*.svg"))
    assert (outs[0] / "sweep.csv").exists() and (outs[0] / "sweep_best.json").exists()


def test_cli_flags_before_subcommand(tmp_path, config_file):
    out = tmp_path / "r"
    assert main(["--seed", "7", "--out", str(out), "extract-icv", "--config", str(config_file)]) == 0
    prov = json.loads((out / "provenance.json").read_text())
    assert prov["config"]["seed"] == 7
    assert (out / "icv.jsonl").exists() and (out / "icv.bin").exists()


def test_cli_other_commands(tmp_path, config_file):
    out = tmp_path / "o"
    for cmd in ("extract-fv", "sweep", "ablate", "cie-map"):
        assert main([cmd, "--config", str(config_file), "--out", str(out / cmd)]) == 0, cmd
    assert (out / "extract-fv" / "fv.jsonl").exists() and (out / "extract-fv" / "cie_map.csv").exists()
    assert (out / "ablate" / "ablation.csv").exists()
    assert (out / "cie-map" / "cie_correlation.json").exists()
    assert main(["report", "--config", str(config_file), "--out", str(out / "rep"),
                 "--input", str(out / "ablate" / "results.jsonl")]) == 0
    assert (out / "rep" / "summary.csv").exists()


def test_cli_train_toy_tiny(tmp_path):
    cfg = {"version": 1, "train": {"steps": 2, "batch_size": 2, "warmup": 1, "n_docs": 20,
                                   "model": {"n_layers": 1, "n_heads": 2, "d_model": 16, "d_head": 8, "d_mlp": 16}}}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert main(["train-toy", "--config", str(p), "--out", str(tmp_path / "a")]) == 0
    assert main(["train-toy", "--config", str(p), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "model.svlm").read_bytes() == (tmp_path / "b" / "model.svlm").read_bytes()


def test_cli_errors(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"version": 1, "extra": True}))
    assert main(["eval", "--config", str(p)]) == 2
    assert "extra" in capsys.readouterr().err
    assert main(["eval", "--config", str(tmp_path / "missing.json")]) == 2
    p.write_text(json.dumps({"version": 1}))
    assert main(["eval", "--config", str(p), "--out", str(tmp_path / "x")]) == 2
    with pytest.raises(SystemExit):
        main(["bogus"])
    with pytest.raises(InputError):
        from svlab.harness.report import emit_report
        emit_report([], tmp_path)
