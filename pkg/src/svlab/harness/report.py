"""Result files: results.jsonl, summary.csv, SVG charts and provenance.json."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import platform
import subprocess
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .. import __version__, _accel
from ..errors import InputError
from .evaluate import EvalRecord, by_seed, task_metric
from .svg import bar_chart, heatmap, line_chart, scatter_chart

SUMMARY_FIELDS = ("task", "method", "style", "metric", "mean", "std", "n")
BEHAVIORAL_TASKS = ("detox", "sentiment")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _csv(rows: Sequence[Mapping], fields: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r[f]) for f in fields])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6f}"
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return v


def records_jsonl(records: Sequence[EvalRecord]) -> str:
    return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in records)


def read_records(path: str | Path) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                try:
                    out.append(EvalRecord.from_dict(json.loads(line)))
                except (json.JSONDecodeError, TypeError) as exc:
                    raise InputError(f"{path}:{lineno}: bad record ({exc})") from None
    return out


def metric_name(task: str) -> str:
    return "behavioral_shift" if task in BEHAVIORAL_TASKS else "accuracy"


def summarize(records: Sequence[EvalRecord], ge_threshold: float = 2.0, min_gradable: float = 0.6) -> list:
    """Per (task, method, style, metric): mean and sample std across seeds."""
    groups: dict = {}
    for r in records:
        groups.setdefault((r.task, r.method, r.style), []).append(r)
    rows = []
    for (task, method, style) in sorted(groups):
        seeds = by_seed(groups[(task, method, style)])
        per = {metric_name(task): [], "ge": [], "dist1": [], "dist2": [], "gradable_fraction": []}
        for recs in seeds.values():
            per[metric_name(task)].append(task_metric(recs, ge_threshold))
            per["ge"].append(float(np.mean([r.ge for r in recs])))
            per["dist1"].append(float(np.mean([r.dist1 for r in recs])))
            per["dist2"].append(float(np.mean([r.dist2 for r in recs])))
            per["gradable_fraction"].append(sum(r.gradable for r in recs) / len(recs))
        for metric, vals in per.items():
            a = np.asarray(vals, dtype=np.float64)
            rows.append({"task": task, "method": method, "style": style, "metric": metric,
                         "mean": float(a.mean()), "std": float(a.std(ddof=1)) if len(a) > 1 else 0.0,
                         "n": len(a)})
    return rows


def emit_report(records: Sequence[EvalRecord], out_dir: str | Path, ge_threshold: float = 2.0) -> list:
    """Write results.jsonl, summary.csv and one bar chart per (style, metric)."""
    if not records:
        raise InputError("no records to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / "results.jsonl", records_jsonl(records))
    rows = summarize(records, ge_threshold)
    _write(out / "summary.csv", _csv(rows, SUMMARY_FIELDS))
    written = [out / "results.jsonl", out / "summary.csv"]
    for style in sorted({r["style"] for r in rows}):
        for metric in ("task_metric", "ge"):
            sel = [r for r in rows if r["style"] == style and
                   (r["metric"] == "ge" if metric == "ge" else r["metric"] in ("accuracy", "behavioral_shift"))]
            tasks = sorted({r["task"] for r in sel})
            methods = sorted({r["method"] for r in sel})
            lookup = {(r["task"], r["method"]): r["mean"] for r in sel}
            series = {m: [lookup.get((t, m), 0.0) for t in tasks] for m in methods}
            label = "generation entropy (bits)" if metric == "ge" else "accuracy / behavioral shift (%)"
            svg = bar_chart(f"{label} - {style}", tasks, series, label)
            path = out / f"{metric}_{style}.svg"
            _write(path, svg)
            written.append(path)
    return written


def write_sweep(results: Sequence, out_dir: str | Path) -> None:
    out = Path(out_dir)
    rows = [row for res in results for row in res.table]
    fields = ("task", "strength", "n_demos", "seed", "metric", "ge", "gradable_fraction", "admissible",
              "cell_admissible")
    _write(out / "sweep.csv", _csv(rows, fields))
    best = [{"task": r.task, **(r.best or {"strength": None, "n_demos": None, "metric": None}),
             "status": "ok" if r.best else "no admissible ICV"} for r in results]
    _write(out / "sweep_best.json", json.dumps(best, indent=2, sort_keys=True) + "\n")
    for res in results:
        ks = sorted({r["n_demos"] for r in res.table})
        lams = sorted({r["strength"] for r in res.table})
        series = {}
        for k in ks:
            series[f"k={k}"] = [float(np.mean([r["metric"] for r in res.table
                                               if r["n_demos"] == k and r["strength"] == lam])) for lam in lams]
        _write(out / f"sweep_{res.task}.svg",
               line_chart(f"ICV sweep - {res.task}", lams, series, "task metric (%)", "strength"))


def write_ablation(results: Sequence, out_dir: str | Path) -> None:
    out = Path(out_dir)
    rows = [row for res in results for row in res.summary]
    fields = ("task", "kind", "location", "layers", "metric", "delta", "ge", "gradable_fraction")
    _write(out / "ablation.csv", _csv(rows, fields))
    for kind in sorted({r["kind"] for r in rows}):
        sel = [r for r in rows if r["kind"] == kind]
        tasks = sorted({r["task"] for r in sel})
        locs = list(dict.fromkeys(r["location"] for r in sel))
        for metric in ("metric", "ge"):
            lookup = {(r["task"], r["location"]): r[metric] for r in sel}
            series = {l: [lookup.get((t, l), 0.0) for t in tasks] for l in locs}
            _write(out / f"ablation_{kind}_{metric}.svg",
                   bar_chart(f"{kind.upper()} by intervention location ({metric})", tasks, series, metric))


def write_cie(report, out_dir: str | Path) -> None:
    out = Path(out_dir)
    _write(out / "cie.csv", _csv(report.rows, ("task", "k", "total_mean_cie", "total_sum_cie", "fv_gain")))
    rho = "undefined" if report.spearman is None else f"{report.spearman:.6f}"
    _write(out / "cie_correlation.json", json.dumps(
        {"spearman": report.spearman, "note": report.note, "n_tasks": len(report.rows)}, sort_keys=True) + "\n")
    pts = [(r["total_mean_cie"], r["fv_gain"], r["task"]) for r in report.rows]
    _write(out / "cie.svg", scatter_chart(f"total mean CIE vs FV gain (Spearman {rho})", pts,
                                          "total mean CIE", "FV accuracy gain (points)"))


def write_head_scores(scores: Mapping[str, list], out_dir: str | Path, n_heads: int) -> None:
    out = Path(out_dir)
    rows = [{"task": t, "layer": s.layer, "head": s.head, "aie": s.aie} for t in scores for s in scores[t]]
    _write(out / "cie_map.csv", _csv(rows, ("task", "layer", "head", "aie")))
    for t, ss in scores.items():
        L = max(s.layer for s in ss) + 1
        grid = [[0.0] * n_heads for _ in range(L)]
        for s in ss:
            grid[s.layer][s.head] = s.aie
        _write(out / f"cie_map_{t}.svg", heatmap(f"AIE by head - {t}", grid))


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _git_revision() -> str | None:
    try:
        r = subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5,
                           cwd=Path(__file__).parent)
        return r.stdout.strip() or None
    except (OSError, subprocess.SubprocessError):
        return None


def write_provenance(out_dir: str | Path, config, command: str, data_files: Mapping[str, str | Path] = (),
                     extra: Mapping | None = None) -> Path:
    from ..tasks.datasets import BEHAVIORAL, FUNCTIONAL, _data_file

    hashes = {}
    for name in FUNCTIONAL + BEHAVIORAL:
        hashes[f"task:{name}"] = hashlib.sha256(_data_file(f"{name}.jsonl").read_bytes()).hexdigest()
    for name in ("fillers.json", "templates.json", "lexicons.json"):
        hashes[name] = hashlib.sha256(_data_file(name).read_bytes()).hexdigest()
    for label, path in dict(data_files).items():
        if path and Path(path).exists():
            hashes[label] = file_sha256(path)
    prov = {
        "command": command,
        "config": config.to_dict(),
        "config_hash": config.hash(),
        "code_version": __version__,
        "git_revision": _git_revision(),
        "backend": _accel.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "data_hashes": hashes,
        **(extra or {}),
    }
    path = Path(out_dir) / "provenance.json"
    _write(path, json.dumps(prov, indent=2, sort_keys=True, default=str) + "\n")
    return path
